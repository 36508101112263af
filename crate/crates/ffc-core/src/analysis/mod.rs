//! Characteristic analyses of high-score features and misclassification
//! correction by targeted component removal.

mod characteristics;
mod correction;
mod maintain;
mod render;

pub use characteristics::{
    binarize_high_score, characteristics, class_concentration_kurtosis, excess_kurtosis,
    interclass_specificity, write_characteristics_csv, CharacteristicsReport, TagMatrix,
};
pub use correction::{
    correct_misclassified, default_correction_schedule, misclassified_indices,
    write_correction_csv, CorrectionOutcome, CorrectionReport, SampleCorrection,
};
pub use maintain::{keep_top_fraction, maintain_rate_curve};
pub use render::deleted_features_to_spatial;
