//! Small numeric helpers shared across modules.

/// `n` evenly spaced values covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Linear-interpolated percentile of `samples`, `q` in [0, 1].
pub fn percentile(samples: &[f64], q: f64) -> f64 {
    debug_assert!(!samples.is_empty());
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < s.len() {
        s[i] * (1.0 - frac) + s[i + 1] * frac
    } else {
        s[i]
    }
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    percentile(values, 0.5)
}

/// Competition ranks (1 = best/lowest) with tied values receiving the
/// average of the ranks they span. Non-finite entries rank worst.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        match (va.is_finite(), vb.is_finite()) {
            (true, true) => va.partial_cmp(&vb).unwrap(),
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            (false, false) => std::cmp::Ordering::Equal,
        }
    });
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        let tie = |a: f64, b: f64| (a == b) || (!a.is_finite() && !b.is_finite());
        while j + 1 < n && tie(values[idx[j + 1]], values[idx[i]]) {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Least-squares solution of `A x = y` via normal equations with partial
/// pivoting. `a` is row-major, `rows x cols`. A tiny ridge keeps
/// near-singular fits stable.
pub fn lstsq(a: &[f64], y: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    let mut ata = vec![0.0; cols * cols];
    let mut aty = vec![0.0; cols];
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        for i in 0..cols {
            aty[i] += row[i] * y[r];
            for j in i..cols {
                ata[i * cols + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            ata[i * cols + j] = ata[j * cols + i];
        }
        ata[i * cols + i] += 1e-10;
    }
    solve_dense(&mut ata, &mut aty, cols);
    aty
}

/// In-place Gaussian elimination with partial pivoting; solution left in `b`.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) {
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        if d.abs() < 1e-300 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let d = a[col * n + col];
        if d.abs() < 1e-300 {
            b[col] = 0.0;
            continue;
        }
        let mut acc = b[col];
        for c in col + 1..n {
            acc -= a[col * n + c] * b[c];
        }
        b[col] = acc / d;
    }
}

/// Formats a value rounded to `sig` significant digits, trimming trailing
/// zeros, so extracted equations stay stable across runs.
pub fn format_sig(v: f64, sig: usize) -> String {
    let r = round_sig(v, sig);
    if r == 0.0 {
        return "0".to_string();
    }
    if r == r.trunc() && r.abs() < 1e15 {
        return format!("{}", r as i64);
    }
    let s = format!("{:.*}", sig.saturating_sub(1).max(1) + 6, r);
    let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    // Fall back to shortest representation when trimming misbehaves.
    if s.parse::<f64>().map(|p| (p - r).abs() < r.abs() * 1e-9) == Ok(true) {
        s
    } else {
        format!("{r}")
    }
}

/// Rounds to `sig` significant digits.
pub fn round_sig(v: f64, sig: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor();
    let scale = 10f64.powi(sig as i32 - 1 - mag as i32);
    (v * scale).round() / scale
}
