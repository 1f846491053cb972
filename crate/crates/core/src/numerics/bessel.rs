/// `J_0(x) .. J_{k_max}(x)` by Miller's downward recurrence, normalized with
/// `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j(k_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j needs finite x >= 0, got {x}");
    let mut out = vec![0.0; k_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (k_max as f64).max(x);
    let mut start = (top + 20.0 + (160.0 * top.max(1.0)).sqrt()).ceil() as usize;
    start += start % 2;

    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut vals = vec![0.0; start + 1];
    vals[start] = cur;
    for k in (1..=start).rev() {
        let prev = (2.0 * k as f64 / x) * cur - next;
        next = cur;
        cur = prev;
        vals[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            cur *= 1e-250;
            next *= 1e-250;
        }
    }
    for (k, v) in vals.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for k in 0..=k_max {
        out[k] = vals[k] / norm;
    }
    out
}

/// Smallest `q` with `2 sum_{k>q} |J_k(x)| <= eps`.
pub fn jacobi_anger_degree(x: f64, eps: f64) -> usize {
    let k_max = (x.abs() * 1.5 + 60.0 - eps.log10().min(0.0) * 2.0).ceil() as usize;
    let j = bessel_j(k_max, x.abs());
    let mut tail = 0.0;
    let mut q = k_max;
    while q > 0 {
        let next = tail + 2.0 * j[q].abs();
        if next > eps {
            break;
        }
        tail = next;
        q -= 1;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(k: usize, x: f64) -> f64 {
        let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for m in 1..30 {
            term *= -(x * x / 4.0) / (m as f64 * (m + k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn agrees_with_power_series() {
        for &x in &[0.1, 1.0, 2.5, 4.0] {
            let j = bessel_j(12, x);
            for (k, v) in j.iter().enumerate() {
                assert!((v - series(k, x)).abs() < 1e-14, "J_{k}({x})");
            }
        }
        assert!((bessel_j(0, 1.0)[0] - 0.7651976866).abs() < 1e-10);
    }

    #[test]
    fn tiny_argument_does_not_overflow() {
        let j = bessel_j(40, 1e-9);
        assert!((j[0] - 1.0).abs() < 1e-15);
        assert!(j.iter().all(|v| v.is_finite()));
    }
}
