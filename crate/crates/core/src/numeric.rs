//! Small numerical helpers shared by the closed forms.

/// `exp(x)` where `x` is the already-merged exponent of a product of
/// growing and decaying factors. Callers sum exponents first so that
/// products like `lambda^(1-N_P) * e^(-a(N-p1))` never overflow.
#[inline]
pub fn exp_merged(exponent: f64) -> f64 {
    exponent.exp()
}

/// `1 - e^x`, accurate for small `x`.
#[inline]
pub fn one_minus_exp(x: f64) -> f64 {
    -x.exp_m1()
}

/// Pairwise (cascade) summation. The split points depend only on the
/// slice length, so totals are reproducible for a given input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Formats like C's `%.{sig}g`.
pub fn fmt_g(value: f64, sig: usize) -> String {
    if value.is_nan() {
        return "nan".to_string();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if value == 0.0 {
        return if value.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    let sig = sig.max(1);
    // Exponent after rounding to `sig` significant digits.
    let sci = format!("{:.*e}", sig - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, value)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Inclusive `lo:hi:step` range, a single value, or a comma list.
pub fn parse_range(spec: &str) -> crate::Result<Vec<f64>> {
    if spec.contains(',') {
        return spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| crate::Error::Parse(format!("bad number '{s}' in list '{spec}'")))
            })
            .collect();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| crate::Error::Parse(format!("bad number '{s}' in range '{spec}'")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (parse(lo)?, parse(hi)?, parse(step)?);
            if !(step > 0.0) || hi < lo {
                return Err(crate::Error::Parse(format!(
                    "range '{spec}' needs lo <= hi and step > 0"
                )));
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| lo + step * i as f64).collect())
        }
        _ => Err(crate::Error::Parse(format!(
            "range '{spec}' must be a number, a comma list or lo:hi:step"
        ))),
    }
}
