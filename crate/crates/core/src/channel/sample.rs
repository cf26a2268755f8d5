use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChannelModel, FadingKind};
use crate::error::Result;
use crate::linalg::{sqrtm_psd, CMatrix};

/// Deterministic per-sample stream keyed by `(seed, index)`.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws full `N × n` channel realizations from a model.
///
/// The square roots of every `R` and `T` are computed once up front. The
/// sampler is read-only after construction, so it can be shared across
/// threads.
#[derive(Debug, Clone)]
pub struct ChannelSampler<'a> {
    model: &'a ChannelModel,
    r_sqrt: Vec<CMatrix>,
    t_sqrt: Vec<CMatrix>,
    rx_off: Vec<usize>,
    tx_off: Vec<usize>,
}

impl<'a> ChannelSampler<'a> {
    pub fn new(model: &'a ChannelModel) -> Self {
        let dims = model.dims();
        let mut r_sqrt = Vec::new();
        let mut t_sqrt = Vec::new();
        for l in 0..dims.sets() {
            for k in 0..dims.users() {
                r_sqrt.push(sqrtm_psd(model.r(l, k)));
                t_sqrt.push(sqrtm_psd(model.t(l, k)));
            }
        }
        ChannelSampler {
            model,
            r_sqrt,
            t_sqrt,
            rx_off: dims.rx_offsets(),
            tx_off: dims.tx_offsets(),
        }
    }

    pub fn model(&self) -> &ChannelModel {
        self.model
    }

    pub fn sample<R: Rng + ?Sized>(&self, fading: FadingKind, rng: &mut R) -> Result<CMatrix> {
        let entries = fading.sampler()?;
        let dims = self.model.dims();
        let mut h = CMatrix::zeros(dims.total_rx(), dims.total_tx());
        for l in 0..dims.sets() {
            for k in 0..dims.users() {
                let idx = l * dims.users() + k;
                let nl = dims.n_per_set()[l];
                let nk = dims.n_per_user()[k];
                let scale = 1.0 / (nk as f64).sqrt();
                let x: CMatrix = DMatrix::from_fn(nl, nk, |_, _| entries.sample(rng) * scale);
                let block = &self.r_sqrt[idx] * x * &self.t_sqrt[idx] + self.model.hbar(l, k);
                h.view_mut((self.rx_off[l], self.tx_off[k]), (nl, nk)).copy_from(&block);
            }
        }
        Ok(h)
    }
}

/// One-shot convenience wrapper around [`ChannelSampler`].
pub fn sample_channel<R: Rng + ?Sized>(model: &ChannelModel, fading: FadingKind, rng: &mut R) -> Result<CMatrix> {
    ChannelSampler::new(model).sample(fading, rng)
}
