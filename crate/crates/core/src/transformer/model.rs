use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::rng::{self, tag, StreamRng};
use crate::tokenizer::TokenSeq;

const LN_EPS: f64 = 1e-12;
const GELU_C: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout active. Example `i` of the batch draws its masks from
    /// `rng::stream(key, [DROPOUT, i])`.
    Train { key: u64 },
}

/// Activations kept for the backward pass of one sequence.
#[derive(Debug, Clone)]
pub struct ExampleCache {
    ids: Vec<u32>,
    full_len: usize,
    emb_drop: Option<Array2<f64>>,
    layers: Vec<LayerCache>,
    cls: Array1<f64>,
    pooled: Array1<f64>,
    pool_drop: Option<Array1<f64>>,
    head_in: Array1<f64>,
}

#[derive(Debug, Clone)]
struct LayerCache {
    input: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    probs: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    attn_drop: Option<Array2<f64>>,
    xhat1: Array2<f64>,
    inv1: Array1<f64>,
    h1: Array2<f64>,
    f1: Array2<f64>,
    act: Array2<f64>,
    ff_drop: Option<Array2<f64>>,
    xhat2: Array2<f64>,
    inv2: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub examples: Vec<ExampleCache>,
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Row-wise softmax of a two-class logit vector.
pub fn softmax(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

fn layer_norm(
    x: &Array2<f64>,
    gain: &Array1<f64>,
    bias: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>, Array1<f64>) {
    let d = x.ncols() as f64;
    let mean = x.sum_axis(Axis(1)) / d;
    let centered = x - &mean.insert_axis(Axis(1));
    let var = centered.mapv(|v| v * v).sum_axis(Axis(1)) / d;
    let inv = var.mapv(|v| 1.0 / (v + LN_EPS).sqrt());
    let xhat = &centered * &inv.view().insert_axis(Axis(1));
    let y = &xhat * gain + bias;
    (y, xhat, inv)
}

fn layer_norm_backward(
    dy: &Array2<f64>,
    xhat: &Array2<f64>,
    inv: &Array1<f64>,
    gain: &Array1<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let dgain = (dy * xhat).sum_axis(Axis(0));
    let dbias = dy.sum_axis(Axis(0));
    let dxhat = dy * gain;
    let d = dy.ncols() as f64;
    let m1 = dxhat.sum_axis(Axis(1)) / d;
    let m2 = (&dxhat * xhat).sum_axis(Axis(1)) / d;
    let dx = (dxhat - &m1.insert_axis(Axis(1)) - xhat * &m2.insert_axis(Axis(1)))
        * &inv.view().insert_axis(Axis(1));
    (dx, dgain, dbias)
}

fn masked_softmax_rows(scores: &mut Array2<f64>, mask: &[u8]) {
    for mut row in scores.rows_mut() {
        let max = row
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m == 1)
            .map(|(&x, _)| x)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (x, &m) in row.iter_mut().zip(mask) {
            *x = if m == 1 { (*x - max).exp() } else { 0.0 };
            sum += *x;
        }
        row.mapv_inplace(|x| x / sum);
    }
}

fn drop_mask(rng: &mut Option<&mut StreamRng>, rate: f64, shape: (usize, usize)) -> Option<Array2<f64>> {
    let r = rng.as_deref_mut()?;
    if rate == 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - rate);
    Some(Array2::from_shape_fn(shape, |_| {
        if r.gen::<f64>() < rate {
            0.0
        } else {
            keep
        }
    }))
}

fn check_mask(mask: &[u8], config: &ModelConfig) -> Result<usize> {
    if mask.is_empty() || mask.len() > config.max_len {
        return Err(Error::ShapeMismatch(format!(
            "sequence length {} outside 1..={}",
            mask.len(),
            config.max_len
        )));
    }
    if mask.iter().any(|&m| m > 1) {
        return Err(Error::ShapeMismatch("attention mask must be 0/1".into()));
    }
    // Positions after the last attended one can never reach the first
    // position's output, so they are not computed.
    mask.iter()
        .rposition(|&m| m == 1)
        .map(|p| p + 1)
        .ok_or_else(|| Error::ShapeMismatch("attention mask has no attended position".into()))
}

/// Token-embedding rows for `ids`.
pub fn embed(params: &ModelParams, ids: &[u32]) -> Result<Array2<f64>> {
    let vocab = params.config.vocab_size;
    let mut out = Array2::zeros((ids.len(), params.config.d_model));
    for (mut row, &id) in out.rows_mut().into_iter().zip(ids) {
        if id as usize >= vocab {
            return Err(Error::TokenOutOfRange { id, size: vocab });
        }
        row.assign(&params.token_embedding.row(id as usize));
    }
    Ok(out)
}

fn attention(
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    mask: &[u8],
    config: &ModelConfig,
) -> (Array2<f64>, Vec<Array2<f64>>) {
    let hd = config.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let mut ctx = Array2::zeros(q.raw_dim());
    let mut probs = Vec::with_capacity(config.n_heads);
    for h in 0..config.n_heads {
        let cols = s![.., h * hd..(h + 1) * hd];
        let mut p = q.slice(cols).dot(&k.slice(cols).t()) * scale;
        masked_softmax_rows(&mut p, mask);
        ctx.slice_mut(cols).assign(&p.dot(&v.slice(cols)));
        probs.push(p);
    }
    (ctx, probs)
}

fn forward_core(
    params: &ModelParams,
    input: Array2<f64>,
    ids: Vec<u32>,
    mask: &[u8],
    full_len: usize,
    mut rng: Option<&mut StreamRng>,
) -> ([f64; 2], ExampleCache) {
    let cfg = &params.config;
    let rate = cfg.dropout_rate;
    let n = input.nrows();
    let mut x = input + &params.position_embedding.slice(s![..n, ..]);
    let emb_drop = drop_mask(&mut rng, rate, x.dim());
    if let Some(m) = &emb_drop {
        x *= m;
    }
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for layer in &params.layers {
        let q = x.dot(&layer.wq) + &layer.bq;
        let k = x.dot(&layer.wk) + &layer.bk;
        let v = x.dot(&layer.wv) + &layer.bv;
        let (ctx, probs) = attention(&q, &k, &v, mask, cfg);
        let mut a = ctx.dot(&layer.wo) + &layer.bo;
        let attn_drop = drop_mask(&mut rng, rate, a.dim());
        if let Some(m) = &attn_drop {
            a *= m;
        }
        let (h1, xhat1, inv1) = layer_norm(&(&x + &a), &layer.ln1_gain, &layer.ln1_bias);
        let f1 = h1.dot(&layer.w1) + &layer.b1;
        let act = f1.mapv(gelu);
        let mut f2 = act.dot(&layer.w2) + &layer.b2;
        let ff_drop = drop_mask(&mut rng, rate, f2.dim());
        if let Some(m) = &ff_drop {
            f2 *= m;
        }
        let (h2, xhat2, inv2) = layer_norm(&(&h1 + &f2), &layer.ln2_gain, &layer.ln2_bias);
        layers.push(LayerCache {
            input: std::mem::replace(&mut x, h2),
            q,
            k,
            v,
            probs,
            ctx,
            attn_drop,
            xhat1,
            inv1,
            h1,
            f1,
            act,
            ff_drop,
            xhat2,
            inv2,
        });
    }
    let cls = x.row(0).to_owned();
    let pooled = (cls.dot(&params.pooler_w) + &params.pooler_b).mapv(f64::tanh);
    let pool_drop = drop_mask(&mut rng, rate, (1, cfg.d_model)).map(|m| m.row(0).to_owned());
    let head_in = match &pool_drop {
        Some(m) => &pooled * m,
        None => pooled.clone(),
    };
    let out = head_in.dot(&params.classifier_w) + &params.classifier_b;
    let cache = ExampleCache {
        ids,
        full_len,
        emb_drop,
        layers,
        cls,
        pooled,
        pool_drop,
        head_in,
    };
    ([out[0], out[1]], cache)
}

fn forward_ids(
    params: &ModelParams,
    ids: &[u32],
    mask: &[u8],
    rng: Option<&mut StreamRng>,
) -> Result<([f64; 2], ExampleCache)> {
    if ids.len() != mask.len() {
        return Err(Error::ShapeMismatch("ids and mask lengths differ".into()));
    }
    let n = check_mask(mask, &params.config)?;
    let input = embed(params, &ids[..n])?;
    if let Some(&id) = ids[n..].iter().find(|&&id| id as usize >= params.config.vocab_size) {
        return Err(Error::TokenOutOfRange {
            id,
            size: params.config.vocab_size,
        });
    }
    Ok(forward_core(params, input, ids[..n].to_vec(), &mask[..n], ids.len(), rng))
}

/// Forward pass from token-embedding rows instead of ids (position
/// embeddings are still added). Used by gradient-based attribution.
pub fn forward_embedded(
    params: &ModelParams,
    input: ArrayView2<'_, f64>,
    mask: &[u8],
    rng: Option<&mut StreamRng>,
) -> Result<([f64; 2], ExampleCache)> {
    if input.nrows() != mask.len() || input.ncols() != params.config.d_model {
        return Err(Error::ShapeMismatch(format!(
            "embedded input {:?} for mask of length {} and d_model {}",
            input.dim(),
            mask.len(),
            params.config.d_model
        )));
    }
    let n = check_mask(mask, &params.config)?;
    let rows = input.slice(s![..n, ..]).to_owned();
    Ok(forward_core(params, rows, Vec::new(), &mask[..n], mask.len(), rng))
}

fn example_rng(mode: Mode, index: usize) -> Option<StreamRng> {
    match mode {
        Mode::Eval => None,
        Mode::Train { key } => Some(rng::stream(key, &[tag::DROPOUT, index as u64])),
    }
}

/// Batched forward pass. Returns logits `[B, 2]` and the cache needed by
/// [`backward`]. Examples are independent and may run on several threads.
pub fn forward(params: &ModelParams, batch: &[TokenSeq], mode: Mode) -> Result<(Array2<f64>, ForwardCache)> {
    let results: Vec<([f64; 2], ExampleCache)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, seq)| {
            let mut rng = example_rng(mode, i);
            forward_ids(params, &seq.ids, &seq.mask, rng.as_mut())
        })
        .collect::<Result<_>>()?;
    let mut logits = Array2::zeros((batch.len(), 2));
    let mut examples = Vec::with_capacity(batch.len());
    for (i, (l, c)) in results.into_iter().enumerate() {
        logits[[i, 0]] = l[0];
        logits[[i, 1]] = l[1];
        examples.push(c);
    }
    Ok((logits, ForwardCache { examples }))
}

/// Eval-mode logits without keeping activations.
pub fn logits(params: &ModelParams, batch: &[TokenSeq]) -> Result<Vec<[f64; 2]>> {
    batch
        .par_iter()
        .map(|seq| forward_ids(params, &seq.ids, &seq.mask, None).map(|(l, _)| l))
        .collect()
}

pub fn predict_proba(params: &ModelParams, batch: &[TokenSeq]) -> Result<Vec<[f64; 2]>> {
    Ok(logits(params, batch)?.into_iter().map(softmax).collect())
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    a.view().insert_axis(Axis(1)).dot(&b.view().insert_axis(Axis(0)))
}

/// Gradients of `dlogits . logits` for one example.
///
/// The returned parameter gradients have an empty token-embedding tensor;
/// the gradient with respect to the token-embedding input rows is returned
/// separately (zero rows for positions that were not computed).
pub fn backward_example(
    params: &ModelParams,
    cache: &ExampleCache,
    dlogits: [f64; 2],
) -> (ModelParams, Array2<f64>) {
    let cfg = params.config;
    let d = cfg.d_model;
    let hd = cfg.head_dim();
    let scale = 1.0 / (hd as f64).sqrt();
    let mut g = ModelParams::zeros(&ModelConfig {
        vocab_size: 0,
        ..cfg
    });
    g.config = cfg;

    let dl = Array1::from(dlogits.to_vec());
    g.classifier_w = outer(&cache.head_in, &dl);
    g.classifier_b = dl.clone();
    let mut dpooled = params.classifier_w.dot(&dl);
    if let Some(m) = &cache.pool_drop {
        dpooled *= m;
    }
    let dz = dpooled * cache.pooled.mapv(|p| 1.0 - p * p);
    g.pooler_w = outer(&cache.cls, &dz);
    let dcls = params.pooler_w.dot(&dz);
    g.pooler_b = dz;

    let n = cache.layers.first().map_or(0, |l| l.input.nrows());
    let mut dx = Array2::zeros((n, d));
    dx.row_mut(0).assign(&dcls);

    for (li, layer) in params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[li];
        let lg = &mut g.layers[li];

        let (dr2, dgain, dbias) = layer_norm_backward(&dx, &lc.xhat2, &lc.inv2, &layer.ln2_gain);
        lg.ln2_gain = dgain;
        lg.ln2_bias = dbias;
        let mut dh1 = dr2.clone();
        let mut df2 = dr2;
        if let Some(m) = &lc.ff_drop {
            df2 *= m;
        }
        lg.w2 = lc.act.t().dot(&df2);
        lg.b2 = df2.sum_axis(Axis(0));
        let df1 = df2.dot(&layer.w2.t()) * lc.f1.mapv(gelu_grad);
        lg.w1 = lc.h1.t().dot(&df1);
        lg.b1 = df1.sum_axis(Axis(0));
        dh1 += &df1.dot(&layer.w1.t());

        let (dr1, dgain, dbias) = layer_norm_backward(&dh1, &lc.xhat1, &lc.inv1, &layer.ln1_gain);
        lg.ln1_gain = dgain;
        lg.ln1_bias = dbias;
        let mut dinput = dr1.clone();
        let mut da = dr1;
        if let Some(m) = &lc.attn_drop {
            da *= m;
        }
        lg.wo = lc.ctx.t().dot(&da);
        lg.bo = da.sum_axis(Axis(0));
        let dctx = da.dot(&layer.wo.t());

        let mut dq = Array2::zeros((n, d));
        let mut dk = Array2::zeros((n, d));
        let mut dv = Array2::zeros((n, d));
        for (h, p) in lc.probs.iter().enumerate() {
            let cols = s![.., h * hd..(h + 1) * hd];
            let dch = dctx.slice(cols);
            let dp = dch.dot(&lc.v.slice(cols).t());
            dv.slice_mut(cols).assign(&p.t().dot(&dch));
            let rowdot = (&dp * p).sum_axis(Axis(1));
            let ds = (p * &(dp - &rowdot.insert_axis(Axis(1)))) * scale;
            dq.slice_mut(cols).assign(&ds.dot(&lc.k.slice(cols)));
            dk.slice_mut(cols).assign(&ds.t().dot(&lc.q.slice(cols)));
        }
        lg.wq = lc.input.t().dot(&dq);
        lg.bq = dq.sum_axis(Axis(0));
        lg.wk = lc.input.t().dot(&dk);
        lg.bk = dk.sum_axis(Axis(0));
        lg.wv = lc.input.t().dot(&dv);
        lg.bv = dv.sum_axis(Axis(0));
        dinput += &dq.dot(&layer.wq.t());
        dinput += &dk.dot(&layer.wk.t());
        dinput += &dv.dot(&layer.wv.t());
        dx = dinput;
    }
    if let Some(m) = &cache.emb_drop {
        dx *= m;
    }
    g.position_embedding.slice_mut(s![..n, ..]).assign(&dx);
    let mut dinput = Array2::zeros((cache.full_len, d));
    dinput.slice_mut(s![..n, ..]).assign(&dx);
    (g, dinput)
}

/// Gradients of `sum_i dlogits[i] . logits[i]` with respect to every
/// parameter. Per-example work runs in parallel; the sum is taken in batch
/// order so the result does not depend on the thread count.
pub fn backward(params: &ModelParams, cache: &ForwardCache, dlogits: &Array2<f64>) -> Result<ModelParams> {
    if dlogits.dim() != (cache.examples.len(), 2) {
        return Err(Error::ShapeMismatch(format!(
            "upstream gradient {:?} for a batch of {}",
            dlogits.dim(),
            cache.examples.len()
        )));
    }
    let parts: Vec<(ModelParams, Array2<f64>)> = cache
        .examples
        .par_iter()
        .enumerate()
        .map(|(i, c)| backward_example(params, c, [dlogits[[i, 0]], dlogits[[i, 1]]]))
        .collect();
    let mut total = params.zeros_like();
    let mut tokens = std::mem::replace(
        &mut total.token_embedding,
        Array2::zeros((0, params.config.d_model)),
    );
    for ((g, dinput), c) in parts.iter().zip(&cache.examples) {
        total.add_assign(g)?;
        for (row, &id) in c.ids.iter().enumerate() {
            let mut target = tokens.row_mut(id as usize);
            target += &dinput.row(row);
        }
    }
    total.token_embedding = tokens;
    Ok(total)
}
