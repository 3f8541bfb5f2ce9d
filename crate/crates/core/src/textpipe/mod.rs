//! Raw text to padded id sequences: tokenizer, vocabulary, pretrained vector
//! loading, dataset files, word-order corruptions and linear-model features.

mod dataset;
mod embeddings;
mod features;
mod ordering;
mod tokenize;
mod vocab;

pub use dataset::{load_dataset, preset, read_tsv, Dataset, DatasetPreset, DatasetSummary, Example, LabeledText, Split, SplitName, PRESETS};
pub use embeddings::{infer_embedding_dim, load_embeddings, EmbeddingLoadReport, EmbeddingTable};
pub use features::{bow_featurize, bow_matrix, tfidf_featurize, FeatureMatrix, SparseVec, Tfidf};
pub use ordering::{alternate_shuffle, random_shuffle, Ordering};
pub use tokenize::tokenize;
pub use vocab::{decode, encode_pad, Vocab, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN};
