use crate::entropy::SymbolMode;
use crate::error::{dim_err, Error, Result};
use crate::hyperprior::{decode_latent, encode_latent, StreamPayload};
use crate::motion::{estimate_flow, mv_compress, mv_decompress, FlowConfig};
use crate::tcm::{mine_contexts, DpbEntry, TemporalContextSet};
use crate::tensor::{Grid, MotionField};
use crate::Frame;

use super::contextual::STAGES;
use super::CodecModel;

/// Encoder-side intermediates kept for inspection.
#[derive(Clone, Debug)]
pub struct InterTrace {
    /// Raw estimate `v_t`, never used past the motion encoder.
    pub flow: MotionField,
    /// Decoded `v̂_t`, the field the context miner consumed.
    pub mv_hat: MotionField,
    pub contexts: TemporalContextSet,
    pub temporal_prior: Grid,
}

#[derive(Clone, Debug)]
pub struct InterCoded {
    /// `[mv_main, mv_hyper, ctx_main, ctx_hyper]`.
    pub payloads: Vec<StreamPayload>,
    /// Table-based size estimate for each payload.
    pub estimated_bits: Vec<f64>,
    pub recon: Frame,
    pub feature: Grid,
    pub trace: InterTrace,
}

fn latent_shape(model: &CodecModel, height: usize, width: usize) -> (usize, usize, usize) {
    let s = 1 << STAGES;
    (model.config.latent_channels, height / s, width / s)
}

pub fn encode_inter_frame(x: &Frame, dpb: &DpbEntry, model: &CodecModel) -> Result<InterCoded> {
    if x.shape() != dpb.frame.shape() {
        return Err(dim_err!("frame {:?} vs reference {:?}", x.shape(), dpb.frame.shape()));
    }
    let flow = estimate_flow(x, &dpb.frame, &FlowConfig::default())?;
    let mv = mv_compress(&flow, &model.mv)?;
    let set = mine_contexts(&dpb.feature, &mv.reconstructed, &model.tcm)?;
    let ctx = &model.contextual;
    let contexts = set.contexts(model.config.tcm_contexts);

    let y = ctx.encode(x, contexts)?;
    let f_c = ctx.temporal_context_encode(contexts)?;
    let latent = encode_latent(&y, &ctx.hyper, SymbolMode::MeanOffset, |h| ctx.fuse_priors(&f_c, h))?;
    let f_hat = ctx.decode(&latent.y_hat, contexts)?;
    let (recon, feature) = ctx.generate(&f_hat, contexts)?;

    let [mv_main, mv_hyper] = mv.payloads();
    let [ctx_main, ctx_hyper] = latent.payloads();
    let estimated_bits = vec![
        mv.latent.main.estimated_bits,
        mv.latent.hyper.estimated_bits,
        latent.main.estimated_bits,
        latent.hyper.estimated_bits,
    ];
    Ok(InterCoded {
        payloads: vec![mv_main, mv_hyper, ctx_main, ctx_hyper],
        estimated_bits,
        recon,
        feature,
        trace: InterTrace { flow, mv_hat: mv.reconstructed, contexts: set, temporal_prior: f_c },
    })
}

/// Rebuilds `(x̂_t, F_t)` from the four inter payloads and the buffered entry.
pub fn decode_inter_frame(payloads: &[StreamPayload], dpb: &DpbEntry, model: &CodecModel) -> Result<(Frame, Grid)> {
    let [mv_main, mv_hyper, ctx_main, ctx_hyper] = payloads else {
        return Err(Error::Decode(format!("inter frame needs 4 payloads, got {}", payloads.len())));
    };
    let (h, w) = (dpb.frame.height(), dpb.frame.width());
    let mv_hat = mv_decompress(mv_main, mv_hyper, h, w, &model.mv)?;
    let set = mine_contexts(&dpb.feature, &mv_hat, &model.tcm)?;
    let ctx = &model.contextual;
    let contexts = set.contexts(model.config.tcm_contexts);

    let f_c = ctx.temporal_context_encode(contexts)?;
    let y_hat = decode_latent(
        ctx_main,
        ctx_hyper,
        latent_shape(model, h, w),
        &ctx.hyper,
        SymbolMode::MeanOffset,
        |hy| ctx.fuse_priors(&f_c, hy),
    )?;
    let f_hat = ctx.decode(&y_hat, contexts)?;
    ctx.generate(&f_hat, contexts)
}
