use crate::stats::median;

/// Consistency factor making the MAD estimate a Gaussian sigma.
pub const MAD_SCALE: f64 = 1.4826;
pub const MAD_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MadFiltered {
    pub kept: Vec<f64>,
    pub mask: Vec<bool>,
}

/// Keeps values within three scaled MADs of the median. With zero MAD only
/// values equal to the median survive.
pub fn mad_filter(values: &[f64]) -> MadFiltered {
    if values.is_empty() {
        return MadFiltered {
            kept: Vec::new(),
            mask: Vec::new(),
        };
    }
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let scaled = MAD_SCALE * median(&deviations);
    let mask: Vec<bool> = deviations
        .iter()
        .map(|&d| if scaled == 0.0 { d == 0.0 } else { d <= MAD_THRESHOLD * scaled })
        .collect();
    let kept = values.iter().zip(&mask).filter(|(_, k)| **k).map(|(v, _)| *v).collect();
    MadFiltered { kept, mask }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_outlier() {
        let r = mad_filter(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(r.kept, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(r.mask, vec![true, true, true, true, false]);
    }

    #[test]
    fn constant_sequences() {
        assert_eq!(mad_filter(&[5.0; 4]).kept, vec![5.0; 4]);
        let r = mad_filter(&[5.0, 5.0, 5.0, 7.0, 5.0]);
        assert_eq!(r.kept, vec![5.0; 4]);
        assert!(!r.mask[3]);
    }

    #[test]
    fn threshold_is_three_scaled_mads() {
        // median 0, MAD 1, limit 4.4478
        assert!(mad_filter(&[-1.0, 1.0, 0.0, -1.0, 4.44]).mask[4]);
        assert!(!mad_filter(&[-1.0, 1.0, 0.0, -1.0, 4.46]).mask[4]);
    }

    #[test]
    fn empty_input() {
        assert!(mad_filter(&[]).kept.is_empty());
    }
}
