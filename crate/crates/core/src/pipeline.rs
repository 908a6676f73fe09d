//! The complete codec: layer factorization, scalable weighted-binary coding,
//! DBN compression of the basis images and the container.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::bitstream::{
    read_container, write_container, Container, ContainerHeader, LevelPayload, QuantizerSpec, StackSource,
};
use crate::dbn::{
    self, depatchify, patchify_coding, patchify_training, train_dbn, Autoencoder, DbnConfig, NormRecord, PatchDataset,
    PatchLayout, TrainingReport,
};
use crate::error::{Error, Result};
use crate::layers::{default_depths, optimize_layers, render_additive, LayerStack, SolverConfig, ValidityMask};
use crate::lightfield::LightField;
use crate::quality::{masked_mse, masked_psnr, PEAK_NORMALIZED};
use crate::wbi::{encode_scalable, encode_scalable_with, reconstruct, BasisImages, CodeMatrix, ImageStack, WbiCode, WbiConfig};

/// A trained autoencoder together with the patch size it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct DbnModel {
    pub net: Autoencoder,
    pub patch: usize,
}

impl DbnModel {
    pub fn new(net: Autoencoder, patch: usize) -> Result<Self> {
        if net.input_len() != patch * patch {
            return Err(Error::Shape(format!(
                "network input {} does not match patch size {patch}",
                net.input_len()
            )));
        }
        Ok(DbnModel { net, patch })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, patch) = dbn::load_model(path)?;
        Self::new(net, patch)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        dbn::save_model(path, &self.net, self.patch)
    }

    pub fn fingerprint(&self) -> u64 {
        dbn::fingerprint(&self.net, self.patch)
    }

    /// Encoder feature counts, input excluded.
    pub fn feature_sizes(&self) -> Vec<usize> {
        let sizes = self.net.sizes();
        sizes[1..=sizes.len() / 2].to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub layer_count: usize,
    /// Defaults to [`default_depths`] for `layer_count`.
    pub depths: Option<Vec<i64>>,
    pub solver: SolverConfig,
    pub wbi: WbiConfig,
    pub source: StackSource,
    pub quant_bits: u32,
    /// Store the basis images as raw floats instead of DBN latent codes.
    pub lossless: bool,
    /// Gradient steps refining each latent code against the decoder before
    /// quantization; 0 keeps the plain encoder output.
    pub refine_iterations: usize,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            layer_count: 3,
            depths: None,
            solver: SolverConfig::default(),
            wbi: WbiConfig::default(),
            source: StackSource::Layers,
            quant_bits: 10,
            lossless: false,
            refine_iterations: 0,
        }
    }
}

impl CodecConfig {
    pub fn depths(&self) -> Vec<i64> {
        self.depths.clone().unwrap_or_else(|| default_depths(self.layer_count))
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_count == 0 {
            return Err(Error::Config("layers.count must be >= 1".into()));
        }
        if let Some(d) = &self.depths {
            if d.len() != self.layer_count {
                return Err(Error::Config(format!(
                    "layers.depths lists {} depths for layers.count = {}",
                    d.len(),
                    self.layer_count
                )));
            }
            if d.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("layers.depths must be strictly increasing".into()));
            }
        }
        self.solver.validate()?;
        self.wbi.validate()?;
        QuantizerSpec::new(self.quant_bits)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

/// The image stack handed to the weighted-binary coder, plus the layers it
/// came from when factorizing.
#[derive(Debug, Clone)]
pub struct PreparedStack {
    pub stack: ImageStack,
    pub layers: Option<LayerStack>,
    pub layer_loss_history: Vec<f64>,
    pub seconds: f64,
}

/// Runs the layer solver (or takes the views directly).
pub fn prepare_stack(lf: &LightField, cfg: &CodecConfig) -> Result<PreparedStack> {
    cfg.validate()?;
    let start = Instant::now();
    let (stack, layers, history) = match cfg.source {
        StackSource::Layers => {
            let sol = optimize_layers(lf, &cfg.depths(), &cfg.solver)?;
            (ImageStack::from_layers(&sol.stack), Some(sol.stack), sol.loss_history)
        }
        StackSource::Views => (ImageStack::from_views(lf), None, Vec::new()),
    };
    Ok(PreparedStack {
        stack,
        layers,
        layer_loss_history: history,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub header: ContainerHeader,
    /// What the decoder reconstructs at every level.
    pub code: WbiCode,
    pub layers: Option<LayerStack>,
    /// Levels dropped because they did not improve the reconstruction.
    pub skipped_levels: Vec<usize>,
    pub timings: Vec<StageTiming>,
}

impl Encoded {
    pub fn bits_per_pixel(&self) -> f64 {
        bits_per_pixel(self.bytes.len(), &self.header)
    }
}

/// Container bits over `S * T * W * H`.
pub fn bits_per_pixel(bytes: usize, header: &ContainerHeader) -> f64 {
    let pixels = header.angular.0 * header.angular.1 * header.spatial.0 * header.spatial.1;
    bytes as f64 * 8.0 / pixels as f64
}

/// Turns a decoded image stack into the displayed light field.
fn render_stack(stack: &ImageStack, header: &ContainerHeader) -> Result<(LightField, ValidityMask)> {
    match header.source {
        StackSource::Layers => {
            let layers = LayerStack::from_clamped(
                header.depths.clone(),
                header.spatial,
                header.channels,
                stack.data().to_vec(),
            )?;
            render_additive(&layers, header.angular)
        }
        StackSource::Views => Ok((
            stack.to_light_field(header.angular)?,
            ValidityMask::full(header.angular, header.spatial),
        )),
    }
}

fn add_into(acc: &mut ImageStack, part: &ImageStack) {
    for (a, p) in acc.data_mut().iter_mut().zip(part.data()) {
        *a += p;
    }
}

fn basis_planes(basis: &[f64], plane: usize) -> Vec<&[f64]> {
    basis.chunks(plane).collect()
}

/// Latent symbols for each basis image plus what the decoder will rebuild.
struct CodedBasis {
    symbols: Vec<u32>,
    decoded: BasisImages,
    norms: Vec<NormRecord>,
}

fn code_basis(
    basis: &[f64],
    spatial: (usize, usize),
    model: &DbnModel,
    quant: QuantizerSpec,
    refine: usize,
) -> Result<CodedBasis> {
    let (w, h) = spatial;
    let planes: Vec<(Vec<u32>, Vec<f64>, NormRecord)> = basis_planes(basis, w * h)
        .into_par_iter()
        .map(|plane| {
            let (ds, layout) = patchify_coding(plane, w, h, model.patch)?;
            let mut latent = model.net.encode_patches(&ds.patches)?;
            if refine > 0 {
                for (z, x) in latent.iter_mut().zip(&ds.patches) {
                    *z = model.net.refine_code(z, x, refine)?;
                }
            }
            let symbols = quant.quantize(&latent.concat())?;
            let decoded = rebuild_plane(&symbols, &layout, &ds.records[0], model, quant)?;
            Ok((symbols, decoded, ds.records[0]))
        })
        .collect::<Result<_>>()?;
    let mut out = CodedBasis {
        symbols: Vec::new(),
        decoded: Vec::with_capacity(basis.len()),
        norms: Vec::new(),
    };
    for (s, d, r) in planes {
        out.symbols.extend(s);
        out.decoded.extend(d);
        out.norms.push(r);
    }
    Ok(out)
}

fn rebuild_plane(
    symbols: &[u32],
    layout: &PatchLayout,
    record: &NormRecord,
    model: &DbnModel,
    quant: QuantizerSpec,
) -> Result<Vec<f64>> {
    let codes: Vec<Vec<f64>> = quant
        .dequantize(symbols)
        .chunks(model.net.code_len())
        .map(<[f64]>::to_vec)
        .collect();
    let patches = model.net.decode_patches(&codes)?;
    depatchify(&patches, layout, record)
}

/// Encodes with a precomputed stack, so sweeps can reuse one factorization.
pub fn encode_prepared(
    lf: &LightField,
    prepared: &PreparedStack,
    cfg: &CodecConfig,
    model: Option<&DbnModel>,
) -> Result<Encoded> {
    cfg.validate()?;
    let model = match (cfg.lossless, model) {
        (true, _) => None,
        (false, Some(m)) => Some(m),
        (false, None) => return Err(Error::Config("lossy encoding needs a DBN model".into())),
    };
    let target = &prepared.stack;
    let (w, h) = target.spatial_dims();
    if let Some(m) = model {
        if m.patch > w || m.patch > h {
            return Err(Error::Config(format!("model patch size {} exceeds the {w}x{h} images", m.patch)));
        }
    }
    let channels = target.channels();
    let mut header = ContainerHeader {
        angular: lf.angular_dims(),
        spatial: lf.spatial_dims(),
        channels: lf.channels(),
        depths: cfg.depths(),
        beta: 1.0 / cfg.layer_count as f64,
        source: cfg.source,
        partition: cfg.wbi.partition.clone(),
        patch: model.map_or(0, |m| m.patch),
        dbn_sizes: model.map_or_else(Vec::new, DbnModel::feature_sizes),
        model_fingerprint: model.map_or(0, DbnModel::fingerprint),
        quant_bits: if cfg.lossless { 0 } else { cfg.quant_bits },
        lossless: cfg.lossless,
        norms: if cfg.lossless {
            Vec::new()
        } else {
            vec![NormRecord { min: 0.0, max: 0.0 }; cfg.wbi.components * channels]
        },
    };
    if header.spatial != (w, h) || header.channels != channels {
        return Err(Error::Shape("prepared stack does not match the light field".into()));
    }
    let quant = QuantizerSpec::new(cfg.quant_bits)?;

    let start = Instant::now();
    let mut payloads = Vec::with_capacity(cfg.wbi.levels());
    let mut skipped = Vec::new();
    let mut decoded_sum = ImageStack::zeros(target.count(), channels, (w, h));
    let error_of = |stack: &ImageStack| -> Result<f64> {
        let (view, mask) = render_stack(stack, &header)?;
        masked_mse(lf, &view, &mask)
    };
    let mut current_error = error_of(&decoded_sum)?;
    let mut norms = header.norms.clone();
    let mut component = 0;
    let code = encode_scalable_with(target, &cfg.wbi, |m, codes, basis| {
        let rows = codes.rows();
        let first = component;
        component += rows;
        let Some(model) = model else {
            payloads.push(LevelPayload::Raw {
                codes: codes.clone(),
                basis: basis.clone(),
            });
            return Ok((codes, basis));
        };
        let coded = code_basis(&basis, (w, h), model, quant, cfg.refine_iterations)?;
        let mut trial = decoded_sum.clone();
        add_into(&mut trial, &reconstruct(&codes, &coded.decoded, target));
        let trial_error = error_of(&trial)?;
        if trial_error < current_error {
            decoded_sum = trial;
            current_error = trial_error;
            norms[first * channels..(first + rows) * channels].copy_from_slice(&coded.norms);
            payloads.push(LevelPayload::Latent {
                codes: codes.clone(),
                symbols: coded.symbols,
            });
            Ok((codes, coded.decoded))
        } else {
            skipped.push(m);
            payloads.push(LevelPayload::Skipped);
            Ok((CodeMatrix::zeros(rows, target.count()), vec![0.0; basis.len()]))
        }
    })?;
    header.norms = norms;
    let coding_seconds = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let bytes = write_container(&Container {
        header: header.clone(),
        levels: payloads,
    })?;
    Ok(Encoded {
        bytes,
        header,
        code,
        layers: prepared.layers.clone(),
        skipped_levels: skipped,
        timings: vec![
            StageTiming {
                stage: "layers",
                seconds: prepared.seconds,
            },
            StageTiming {
                stage: "wbi+dbn",
                seconds: coding_seconds,
            },
            StageTiming {
                stage: "container",
                seconds: start.elapsed().as_secs_f64(),
            },
        ],
    })
}

pub fn encode(lf: &LightField, cfg: &CodecConfig, model: Option<&DbnModel>) -> Result<Encoded> {
    let prepared = prepare_stack(lf, cfg)?;
    encode_prepared(lf, &prepared, cfg, model)
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub header: ContainerHeader,
    pub levels_used: usize,
    pub stack: ImageStack,
    pub light_field: LightField,
    pub mask: ValidityMask,
}

impl Decoded {
    /// PSNR against `original` over the valid rays.
    pub fn psnr(&self, original: &LightField) -> Result<f64> {
        masked_psnr(original, &self.light_field, &self.mask, PEAK_NORMALIZED)
    }

    pub fn layers(&self) -> Result<Option<LayerStack>> {
        match self.header.source {
            StackSource::Layers => Ok(Some(LayerStack::from_clamped(
                self.header.depths.clone(),
                self.header.spatial,
                self.header.channels,
                self.stack.data().to_vec(),
            )?)),
            StackSource::Views => Ok(None),
        }
    }
}

fn check_model<'a>(header: &ContainerHeader, model: Option<&'a DbnModel>) -> Result<&'a DbnModel> {
    let model = model.ok_or_else(|| Error::Config("this container needs the DBN model it was encoded with".into()))?;
    if model.fingerprint() != header.model_fingerprint
        || model.patch != header.patch
        || model.feature_sizes() != header.dbn_sizes
    {
        return Err(Error::Config("DBN model does not match the container".into()));
    }
    Ok(model)
}

/// Decodes the first `max_level` levels (all when `None`).
pub fn decode(bytes: &[u8], max_level: Option<usize>, model: Option<&DbnModel>) -> Result<Decoded> {
    let container = read_container(bytes, max_level)?;
    let header = container.header;
    let model = if header.lossless {
        None
    } else {
        Some(check_model(&header, model)?)
    };
    let (w, h) = header.spatial;
    let plane = w * h;
    let mut stack = ImageStack::zeros(header.image_count(), header.channels, header.spatial);
    let mut first = 0;
    for (m, level) in container.levels.iter().enumerate() {
        let rows = header.partition[m];
        match level {
            LevelPayload::Skipped => {}
            LevelPayload::Raw { codes, basis } => {
                let part = reconstruct(codes, basis, &stack);
                add_into(&mut stack, &part);
            }
            LevelPayload::Latent { codes, symbols } => {
                let model = model.ok_or_else(|| Error::Corrupt("latent section in a lossless container".into()))?;
                let quant = QuantizerSpec::new(header.quant_bits)?;
                let layout = PatchLayout::new(w, h, header.patch)?;
                let per_plane = header.tiles_per_image() * header.code_len();
                let decoded: Vec<Vec<f64>> = symbols
                    .par_chunks(per_plane)
                    .enumerate()
                    .map(|(i, s)| rebuild_plane(s, &layout, &header.norms[first * header.channels + i], model, quant))
                    .collect::<Result<_>>()?;
                let basis = decoded.concat();
                debug_assert_eq!(basis.len(), rows * header.channels * plane);
                let part = reconstruct(codes, &basis, &stack);
                add_into(&mut stack, &part);
            }
        }
        first += rows;
    }
    let (light_field, mask) = render_stack(&stack, &header)?;
    Ok(Decoded {
        levels_used: container.levels.len(),
        header,
        stack,
        light_field,
        mask,
    })
}

/// Training patches cut from the basis images of each stack's plain
/// scalable code.
pub fn training_patches(stacks: &[ImageStack], wbi: &WbiConfig, dbn_cfg: &DbnConfig) -> Result<PatchDataset> {
    dbn_cfg.validate()?;
    let mut data = PatchDataset::empty(dbn_cfg.patch);
    for stack in stacks {
        let code = encode_scalable(stack, wbi)?;
        let (w, h) = stack.spatial_dims();
        for level in &code.levels {
            for plane in level.basis.chunks(w * h) {
                data.extend(patchify_training(
                    plane,
                    w,
                    h,
                    dbn_cfg.patch,
                    dbn_cfg.stride,
                    dbn_cfg.min_variance,
                )?);
            }
        }
    }
    Ok(data)
}

/// Factorizes each light field as `cfg` would, then trains a model on the
/// resulting basis-image patches.
pub fn train_model(lfs: &[LightField], cfg: &CodecConfig, dbn_cfg: &DbnConfig) -> Result<(DbnModel, TrainingReport)> {
    let stacks = lfs
        .iter()
        .map(|lf| prepare_stack(lf, cfg).map(|p| p.stack))
        .collect::<Result<Vec<_>>>()?;
    let data = training_patches(&stacks, &cfg.wbi, dbn_cfg)?;
    if data.is_empty() {
        return Err(Error::InvalidValue(
            "no training patches survived the variance threshold".into(),
        ));
    }
    let (net, report) = train_dbn(data.to_matrix().view(), dbn_cfg)?;
    Ok((DbnModel::new(net, dbn_cfg.patch)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbn::{unroll, RbmParams};
    use crate::synth::occluded_disc;
    use crate::wbi::decode_levels;

    fn small_lf() -> LightField {
        occluded_disc((3, 3), (16, 16), 1, 3).unwrap()
    }

    fn quick_config() -> CodecConfig {
        CodecConfig {
            solver: SolverConfig {
                max_iterations: 60,
                ..SolverConfig::default()
            },
            ..CodecConfig::default()
        }
    }

    fn toy_model() -> DbnModel {
        let stack = [RbmParams::random(16, 12, 1), RbmParams::random(12, 6, 2)];
        DbnModel::new(unroll(&stack).unwrap(), 4).unwrap()
    }

    #[test]
    fn lossless_decode_matches_wbi_code() {
        let lf = small_lf();
        let cfg = CodecConfig {
            lossless: true,
            ..quick_config()
        };
        let enc = encode(&lf, &cfg, None).unwrap();
        for m in 1..=2 {
            let dec = decode(&enc.bytes, Some(m), None).unwrap();
            assert_eq!(dec.stack, decode_levels(&enc.code, m).unwrap());
        }
    }

    #[test]
    fn lossy_decoder_matches_encoder_prediction() {
        let lf = small_lf();
        let model = toy_model();
        let enc = encode(&lf, &quick_config(), Some(&model)).unwrap();
        let dec = decode(&enc.bytes, None, Some(&model)).unwrap();
        assert_eq!(dec.stack, decode_levels(&enc.code, 2).unwrap());
        assert_eq!(dec.header.patch, 4);
        assert_eq!(dec.header.layer_count(), 3);
    }

    #[test]
    fn model_is_required_and_checked() {
        let lf = small_lf();
        assert!(encode(&lf, &quick_config(), None).is_err());
        let enc = encode(&lf, &quick_config(), Some(&toy_model())).unwrap();
        assert!(decode(&enc.bytes, None, None).is_err());
        let other = DbnModel::new(
            unroll(&[RbmParams::random(16, 12, 5), RbmParams::random(12, 6, 6)]).unwrap(),
            4,
        )
        .unwrap();
        assert!(decode(&enc.bytes, None, Some(&other)).is_err());
    }

    #[test]
    fn views_source() {
        let lf = small_lf();
        let cfg = CodecConfig {
            source: StackSource::Views,
            lossless: true,
            ..quick_config()
        };
        let enc = encode(&lf, &cfg, None).unwrap();
        assert_eq!(enc.header.image_count(), 9);
        let dec = decode(&enc.bytes, None, None).unwrap();
        assert!(dec.psnr(&lf).unwrap() > 20.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = CodecConfig {
            depths: Some(vec![0, 1]),
            ..CodecConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.depths = Some(vec![1, 0, 2]);
        assert!(cfg.validate().is_err());
        cfg.depths = None;
        cfg.quant_bits = 1;
        assert!(cfg.validate().is_err());
    }
}
