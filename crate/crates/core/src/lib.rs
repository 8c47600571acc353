//! Dimension theory and desk-scale experiments for Weierstrass-type functions
//! `f(x) = sum_n a_n g(b_n x + theta_n)` with `b_{n+1}/b_n -> infinity`.
//!
//! Every numeric type is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`. Measures use exact rationals.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > y)` also rejects NaN

pub mod cantor;
pub mod error;
pub mod grid;
pub mod logreal;
pub mod scalar;
pub mod seqcore;
pub mod theory;
pub mod weierfn;

pub use error::{Error, Result};
pub use logreal::LogReal;
pub use scalar::Real;

pub type LogReal64 = logreal::LogReal<f64>;
pub type SequenceSpec64 = seqcore::SequenceSpec<f64>;
pub type BaseFunction64 = weierfn::BaseFunction<f64>;
pub type TruncatedSeries64 = weierfn::TruncatedSeries<f64>;
pub type DimensionReport64 = theory::DimensionReport<f64>;
pub type ScaleDecomposition64 = theory::ScaleDecomposition<f64>;
pub type BoxCountTable64 = grid::BoxCountTable<f64>;
pub type SlopeFit64 = grid::SlopeFit<f64>;
pub type CantorLevel64 = cantor::CantorLevel<f64>;
pub type LocalExponentTrace64 = cantor::LocalExponentTrace<f64>;
pub type LemmaReport64 = cantor::LemmaReport<f64>;
pub type SequenceSpec32 = seqcore::SequenceSpec<f32>;
pub type TruncatedSeries32 = weierfn::TruncatedSeries<f32>;

/// The same pipeline in `f32` and `f64` agrees to single precision.
#[cfg(test)]
mod scalar_agreement {
    use crate::seqcore::presets;
    use crate::theory::{dimension_report, synthesize};
    use crate::weierfn::{
        make_base, oscillation, truncate, BaseKind, BaseTag, Density, Truncation,
    };

    #[test]
    fn series_values_agree() {
        for tag in [BaseTag::Sawtooth, BaseTag::Sine] {
            let g64 = make_base::<f64>(tag.into()).unwrap();
            let g32 = make_base::<f32>(tag.into()).unwrap();
            let s64 = truncate(
                &presets::wingren::<f64>(30),
                &g64,
                Truncation::Depth(4),
                0.6,
            )
            .unwrap();
            let s32 = truncate(
                &presets::wingren::<f32>(30),
                &g32,
                Truncation::Depth(4),
                0.6,
            )
            .unwrap();
            for i in 0..=256 {
                let x = i as f64 / 256.0;
                let (v64, _) = s64.eval(x);
                let (v32, _) = s32.eval(x as f32);
                assert!((v64 - v32 as f64).abs() < 1e-5, "x = {x}: {v64} vs {v32}");
            }
        }
    }

    #[test]
    fn dimension_reports_agree() {
        let r64 = dimension_report(&synthesize::<f64>(1.25, 1.75).unwrap(), (1, 8)).unwrap();
        let r32 = dimension_report(&synthesize::<f32>(1.25, 1.75).unwrap(), (1, 8)).unwrap();
        assert_eq!(r64.rows.len(), r32.rows.len());
        for (a, b) in r64.rows.iter().zip(&r32.rows) {
            if let (Some(x), Some(y)) = (a.ratio_h, b.ratio_h) {
                assert!((x - y as f64).abs() < 1e-4, "n = {}: {x} vs {y}", a.n);
            }
        }
    }

    #[test]
    fn oscillations_agree() {
        let g64 = make_base::<f64>(BaseKind::Sawtooth).unwrap();
        let g32 = make_base::<f32>(BaseKind::Sawtooth).unwrap();
        let s64 = truncate(
            &presets::wingren::<f64>(30),
            &g64,
            Truncation::Depth(3),
            0.6,
        )
        .unwrap();
        let s32 = truncate(
            &presets::wingren::<f32>(30),
            &g32,
            Truncation::Depth(3),
            0.6,
        )
        .unwrap();
        let o64 = oscillation(&s64, 0.125, 0.25, Density::default()).unwrap();
        let o32 = oscillation(&s32, 0.125, 0.25, Density::default()).unwrap();
        assert!(
            (o64.v - o32.v as f64).abs() < 1e-5,
            "{} vs {}",
            o64.v,
            o32.v
        );
    }
}
