//! Reference results from the original full-scale training runs (hundreds of
//! millions of words, multi-day budgets). Desk-scale runs will not reproduce
//! them; they are reported alongside local results for orientation only.

/// Bits-per-character of the full-scale character LSTM (En/Ge/It).
pub const BPC_LSTM: [f64; 3] = [1.62, 1.51, 1.47];
/// Bits-per-character of the full-scale character RNN (En/Ge/It).
pub const BPC_RNN: [f64; 3] = [2.08, 1.83, 1.97];
/// Perplexity of the full-scale word-level LSTM (En/Ge/It).
pub const PPL_WORD: [f64; 3] = [48.99, 37.96, 42.02];

/// Character vocabulary sizes used at full scale (En/Ge/It).
pub const VOCAB_SIZES: [usize; 3] = [60, 73, 59];

/// Best single-unit boundary correlations, LSTM (En/Ge/It).
pub const BOUNDARY_UNIT_R_LSTM: [f64; 3] = [0.58, 0.69, 0.57];
/// Best single-unit boundary correlations, RNN (En/Ge/It).
pub const BOUNDARY_UNIT_R_RNN: [f64; 3] = [0.40, 0.46, 0.46];

/// Running-text boundary F1, single unit / full layer, LSTM (En/Ge/It).
pub const BOUNDARY_F1_SINGLE_LSTM: [f64; 3] = [87.7, 86.6, 85.6];
pub const BOUNDARY_F1_FULL_LSTM: [f64; 3] = [93.0, 91.9, 92.2];

/// Balanced new-word boundary accuracy, single unit / full layer, LSTM.
pub const BOUNDARY_BALANCED_SINGLE_LSTM: [f64; 3] = [77.5, 80.8, 75.5];
pub const BOUNDARY_BALANCED_FULL_LSTM: [f64; 3] = [90.0, 79.7, 82.9];

/// Word-class probe accuracy, German (LSTM vs autoencoder control).
pub const WORD_CLASS_DE_LSTM: f64 = 89.0;
pub const WORD_CLASS_DE_AUTOENCODER: f64 = 65.1;

/// Sentence completion accuracy of the character LSTM (wiki / in-domain).
pub const COMPLETION_LSTM: [f64; 2] = [34.1, 59.0];

/// Phonotactic likelihood-ratio means of the German LSTM (arithmetic,
/// geometric).
pub const PHONOTACTICS_DE_LSTM_MEANS: [f64; 2] = [3.6, 3.0];

/// Chance accuracies of the minimal-pair tasks.
pub const CHANCE_GENDER: f64 = 100.0 / 3.0;
pub const CHANCE_TWO_WAY: f64 = 50.0;
pub const CHANCE_COMPLETION: f64 = 20.0;
