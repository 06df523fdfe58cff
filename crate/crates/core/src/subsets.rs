//! Lexicographic k-subset enumeration with deterministic parallel scans.
//!
//! Subsets of `0..n` are identified with their lexicographic rank. Parallel
//! scans hand each worker a contiguous rank range; every subset's score is
//! computed independently, and partial minima combine by `(score, rank)`, so
//! the result cannot depend on the worker count.

/// `C(n, k)`, or `None` if the value does not fit in `u64`.
pub fn binomial(n: usize, k: usize) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        // Exact: the product of i+1 consecutive integers is divisible by (i+1)!.
        acc /= (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Advance `c` to the next k-subset of `0..n` in lexicographic order.
/// Returns false when `c` was the last subset.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] != i + n - k {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The k-subset of `0..n` with the given lexicographic rank.
pub fn unrank(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    debug_assert!(rank < binomial(n, k).expect("count fits"));
    let mut subset = Vec::with_capacity(k);
    let mut next = 0;
    for pos in 0..k {
        let remaining = k - pos - 1;
        let mut x = next;
        loop {
            // Subsets that start with x at this position.
            let with_x = binomial(n - x - 1, remaining).expect("count fits");
            if rank < with_x {
                subset.push(x);
                next = x + 1;
                break;
            }
            rank -= with_x;
            x += 1;
        }
    }
    subset
}

/// Scan all k-subsets of `0..n`, minimizing `score`; ties resolve to the
/// lexicographically smallest subset. Returns the winner, its score, and the
/// number of subsets evaluated.
///
/// `workers` bounds the number of OS threads; chunks are contiguous rank
/// ranges so the outcome is identical for any worker count.
pub fn min_scan<F>(n: usize, k: usize, workers: usize, score: F) -> (Vec<usize>, f64, u64)
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let total = binomial(n, k).expect("caller checked the cap");
    assert!(total > 0, "no k-subsets to scan");
    let workers = workers.clamp(1, total.min(64) as usize);

    let scan_range = |lo: u64, hi: u64| -> (f64, u64) {
        let mut c = unrank(n, k, lo);
        let mut best = (f64::INFINITY, lo);
        for rank in lo..hi {
            let s = score(&c);
            if s < best.0 {
                best = (s, rank);
            }
            if rank + 1 < hi {
                let more = next_combination(&mut c, n);
                debug_assert!(more);
            }
        }
        best
    };

    let best = if workers == 1 {
        scan_range(0, total)
    } else {
        let chunk = total / workers as u64;
        let rem = total % workers as u64;
        let mut bounds = Vec::with_capacity(workers + 1);
        let mut at = 0;
        bounds.push(0);
        for w in 0..workers {
            at += chunk + u64::from((w as u64) < rem);
            bounds.push(at);
        }
        let results: Vec<(f64, u64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = bounds
                .windows(2)
                .map(|w| {
                    let (lo, hi) = (w[0], w[1]);
                    scope.spawn(move || scan_range(lo, hi))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker")).collect()
        });
        results
            .into_iter()
            .reduce(|a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            })
            .expect("at least one worker")
    };

    (unrank(n, k, best.1), best.0, total)
}
