//! Hand-backpropagated neural components: a biLSTM slot tagger (softmax or
//! CRF output layer) and a 1-D convolutional intent classifier, trained
//! with Adam and dropout. All parameters of a model live in one flat
//! 64-bit float vector with a declared segment layout, which the
//! optimizer, the serializer and gradient checks share.

mod adam;
mod intent;
mod io;
mod lstm;
mod ops;
mod search;
mod store;
mod tagger;
mod trainer;

pub use adam::{AdamOpts, AdamState};
pub use intent::{CnnIntentClassifier, IntentConfig};
pub use io::{load_intents, load_tagger, save_intents, save_tagger, schema_checksum};
pub use lstm::{
    bilstm_backward, bilstm_forward, lstm_backward, lstm_forward, BiLstmCache, BiLstmSegs,
    LstmCache, LstmSegs,
};
pub use ops::{
    conv1d_maxpool_backward, conv1d_maxpool_forward, dropout_mask, log_softmax, softmax_xent,
    ConvCache,
};
pub use search::{
    random_search_intents, random_search_tagger, sample_grid, GridPoint, DROPOUTS, EMBED_DIMS,
    FILTER_RANGE, HIDDEN_UNITS, KERNEL_RANGE, LAYER_CHOICES,
};
pub use store::{GradBuffer, LayoutBuilder, ParamLayout, ParamStore, SegId, Segment};
pub use tagger::{BiLstmTagger, OutputMode, TaggerConfig, UNK};
pub use trainer::{corpus_vocab, train_intents, train_tagger, NeuralTrainLog, NeuralTrainOpts};
