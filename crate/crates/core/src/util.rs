//! Small helpers shared by the binaries and tests.

/// Stack size for threads that run the recursive evaluators.
pub const BIG_STACK: usize = 1024 * 1024 * 1024;

/// Runs `f` on a fresh thread with a large stack and returns its result.
/// The interpreters recurse on expression and statement depth, which can
/// exceed the default main-thread stack for deeply nested inputs.
pub fn with_large_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    std::thread::Builder::new()
        .stack_size(BIG_STACK)
        .spawn(f)
        .expect("spawn evaluator thread")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

/// Stack size for worker threads of [`pool`].
pub const POOL_STACK: usize = 1024 * 1024 * 1024;

/// Shared rayon pool whose workers have stacks large enough for the
/// evaluators.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: std::sync::OnceLock<rayon::ThreadPool> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .stack_size(POOL_STACK)
            .thread_name(|i| format!("minidafny-worker-{i}"))
            .build()
            .expect("build worker pool")
    })
}
