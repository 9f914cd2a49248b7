use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator shared by every stochastic routine in the crate.
pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Index of the largest element; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `%.{digits}g`-style formatting used by the CSV writers.
pub(crate) fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 { "0".to_string() } else { value.to_string() };
    }
    let exp = value.abs().log10().floor() as i32;
    if exp < -5 || exp >= digits as i32 {
        let s = format!("{:.*e}", digits - 1, value);
        // trim trailing zeros in the mantissa
        let (mantissa, exponent) = s.split_once('e').expect("exponent present");
        let mantissa = trim_fraction(mantissa);
        format!("{mantissa}e{exponent}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, value);
        trim_fraction(&s).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5, 0.0]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0, 9), "0");
        assert_eq!(format_sig(1.0, 9), "1");
        assert_eq!(format_sig(0.123456789123, 9), "0.123456789");
        assert_eq!(format_sig(-2.5, 9), "-2.5");
        assert_eq!(format_sig(1.0e-7, 9), "1e-7");
        assert_eq!(format_sig(123456.7891234, 9), "123456.789");
        for v in [0.3333333333333333, 1.0e-12, 42.0, -7.25e9] {
            let parsed: f64 = format_sig(v, 9).parse().unwrap();
            assert!((parsed - v).abs() <= v.abs() * 1e-8);
        }
    }
}
