//! Loading, synthesizing, transforming and embedding measurement series.

mod pca;
mod synth;
mod table;
mod transform;
mod wav;

pub use pca::{pca_embed, PcaEmbedding};
pub use synth::{
    distort_lift, gen_broadband, gen_lifted_latent, gen_sine, gen_sources, gen_walk, lift_latent, LiftedLatent,
    VelocityShape, WalkConfig, LIFT_DIM, SOURCE_BOX,
};
pub use table::{
    read_csv_trajectory, read_csv_velocity, read_csv_weights, write_csv_trajectory, write_csv_velocity,
    write_csv_weights, TimeSource,
};
pub use transform::{apply_transform, mix_point, mix_two_sources, TransformSpec, MIX_DOMAIN};
pub use wav::{read_wav_trajectory, write_wav_trajectory};
