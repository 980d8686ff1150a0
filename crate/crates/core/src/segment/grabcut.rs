//! Iterated graph-cut segmentation with GMM color models.
//!
//! Energy of a labeling `a` under color models `(fg, bg)`:
//!
//! ```text
//! E = sum_n D_{a_n}(z_n) + sum_{u~v, a_u != a_v} gamma * exp(-beta |z_u - z_v|^2) / dist(u, v)
//! ```
//!
//! over the 8-neighborhood, with `D` the GMM data cost. Each round refits
//! both models on the current labeling and then takes the exact minimum
//! cut, so `E` never increases from one half-step to the next.

use crate::error::{CosegError, Result};
use crate::raster::{BinaryMask, RasterPlane};

use super::gmm::{fit_gmm, Color, GmmModel};
use super::maxflow::{max_flow, FlowNetworkGraph};
use super::trimap::{SeedLabel, TrimapSeed};

#[derive(Clone, Debug, PartialEq)]
pub struct GrabCutParams {
    pub iterations: usize,
    pub components: usize,
    pub gamma: f64,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        GrabCutParams {
            iterations: 5,
            components: 5,
            gamma: 50.0,
        }
    }
}

/// Result of a GrabCut run, including the energy audit trail.
#[derive(Clone, Debug)]
pub struct GrabCutOutcome {
    pub mask: BinaryMask,
    /// Energy after each refit and after each cut, alternating.
    pub energy_trace: Vec<f64>,
    pub rounds: usize,
    /// Set when the trimap was degenerate and the solver was bypassed.
    pub diagnostic: Option<String>,
    pub fg_model: Option<GmmModel>,
    pub bg_model: Option<GmmModel>,
    pub beta: f64,
}

/// Forward half of the 8-neighborhood; each unordered pair appears once.
const NEIGHBOR_OFFSETS: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];

fn neighbor_pairs(w: usize, h: usize) -> impl Iterator<Item = (usize, usize, f64)> {
    (0..h).flat_map(move |y| {
        (0..w).flat_map(move |x| {
            NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || nx >= w as isize || ny >= h as isize {
                    return None;
                }
                let dist = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                Some((y * w + x, ny as usize * w + nx as usize, dist))
            })
        })
    })
}

fn color_sq_dist(a: &Color, b: &Color) -> f64 {
    (0..3).map(|i| (a[i] - b[i]) * (a[i] - b[i])).sum()
}

fn colors(image: &RasterPlane) -> Vec<Color> {
    (0..image.width() * image.height()).map(|i| image.color(i)).collect()
}

/// `1 / (2 <|z_u - z_v|^2>)` over all 8-neighbor pairs; 1 when the image
/// has no contrast at all.
pub fn contrast_beta(image: &RasterPlane) -> f64 {
    let z = colors(image);
    let (mut total, mut count) = (0.0, 0usize);
    for (u, v, _) in neighbor_pairs(image.width(), image.height()) {
        total += color_sq_dist(&z[u], &z[v]);
        count += 1;
    }
    if count == 0 || total <= 0.0 {
        1.0
    } else {
        1.0 / (2.0 * total / count as f64)
    }
}

fn smoothness_weight(gamma: f64, beta: f64, a: &Color, b: &Color, dist: f64) -> f64 {
    gamma * (-beta * color_sq_dist(a, b)).exp() / dist
}

/// Builds the s/t graph: source side is foreground. Hard seeds receive a
/// terminal capacity larger than any finite cut.
pub fn build_graph(
    image: &RasterPlane,
    trimap: &TrimapSeed,
    fg: &GmmModel,
    bg: &GmmModel,
    gamma: f64,
    beta: f64,
) -> Result<FlowNetworkGraph> {
    let (w, h) = image.dims();
    if (trimap.width(), trimap.height()) != (w, h) {
        return Err(CosegError::Argument("trimap does not match the image".into()));
    }
    if !(gamma > 0.0) {
        return Err(CosegError::Argument("gamma must be positive".into()));
    }
    let z = colors(image);
    let n = w * h;
    let mut graph = FlowNetworkGraph::new(n);

    let mut smooth_total = 0.0;
    for (u, v, dist) in neighbor_pairs(w, h) {
        let cap = smoothness_weight(gamma, beta, &z[u], &z[v], dist);
        smooth_total += cap;
        graph.add_edge(u, v, cap, cap);
    }

    // data costs shifted so the cheaper label costs zero
    let mut data = Vec::with_capacity(n);
    let mut max_data: f64 = 0.0;
    for (p, label) in trimap.labels().iter().enumerate() {
        if label.is_hard() {
            data.push((0.0, 0.0));
            continue;
        }
        let d_fg = fg.data_cost(&z[p]);
        let d_bg = bg.data_cost(&z[p]);
        let m = d_fg.min(d_bg);
        let (to_source, to_sink) = (d_bg - m, d_fg - m);
        max_data = max_data.max(to_source).max(to_sink);
        data.push((to_source, to_sink));
    }
    let infinite = 1.0 + max_data * n as f64 + smooth_total;
    for (p, label) in trimap.labels().iter().enumerate() {
        let (src, snk) = match label {
            SeedLabel::HardFg => (infinite, 0.0),
            SeedLabel::HardBg => (0.0, infinite),
            _ => data[p],
        };
        graph.add_terminal(p, src, snk);
    }
    Ok(graph)
}

/// Total energy of a foreground labeling (see module docs).
pub fn grabcut_energy(
    image: &RasterPlane,
    foreground: &[bool],
    fg: Option<&GmmModel>,
    bg: Option<&GmmModel>,
    gamma: f64,
    beta: f64,
) -> f64 {
    let z = colors(image);
    let mut e = 0.0;
    for (p, &is_fg) in foreground.iter().enumerate() {
        let model = if is_fg { fg } else { bg };
        e += model.expect("a model exists for every populated class").data_cost(&z[p]);
    }
    for (u, v, dist) in neighbor_pairs(image.width(), image.height()) {
        if foreground[u] != foreground[v] {
            e += smoothness_weight(gamma, beta, &z[u], &z[v], dist);
        }
    }
    e
}

fn split_colors(z: &[Color], foreground: &[bool]) -> (Vec<Color>, Vec<Color>) {
    let mut fg = Vec::new();
    let mut bg = Vec::new();
    for (c, &f) in z.iter().zip(foreground) {
        if f {
            fg.push(*c);
        } else {
            bg.push(*c);
        }
    }
    (fg, bg)
}

/// Segments `image` starting from `trimap`. Hard labels never change.
///
/// A trimap without probable foreground bypasses the solver and returns its
/// hard-foreground pixels; one without any background returns everything.
pub fn grabcut(image: &RasterPlane, trimap: &TrimapSeed, params: &GrabCutParams, seed: u64) -> Result<GrabCutOutcome> {
    let (w, h) = image.dims();
    if (trimap.width(), trimap.height()) != (w, h) {
        return Err(CosegError::Argument("trimap does not match the image".into()));
    }
    if params.iterations == 0 || params.components == 0 {
        return Err(CosegError::Argument(
            "grabcut needs at least one iteration and one component".into(),
        ));
    }
    let hard_fg = BinaryMask::new(w, h, trimap.labels().iter().map(|&l| l == SeedLabel::HardFg).collect())?;
    let mut labels: Vec<bool> = trimap.labels().iter().map(|l| l.is_foreground()).collect();
    let fg_count = labels.iter().filter(|&&f| f).count();
    let bypass = |mask: BinaryMask, reason: String| {
        log::warn!("grabcut bypassed: {reason}");
        Ok(GrabCutOutcome {
            mask,
            energy_trace: Vec::new(),
            rounds: 0,
            diagnostic: Some(reason),
            fg_model: None,
            bg_model: None,
            beta: 0.0,
        })
    };
    if trimap.count(SeedLabel::ProbFg) == 0 {
        return bypass(hard_fg, "trimap has no probable-foreground pixels".into());
    }
    if fg_count == labels.len() {
        return bypass(BinaryMask::new(w, h, labels)?, "trimap has no background pixels".into());
    }

    let z = colors(image);
    let beta = contrast_beta(image);
    let (fg_px, bg_px) = split_colors(&z, &labels);
    let mut fg = fit_gmm(&fg_px, params.components, seed)?;
    let mut bg = fit_gmm(&bg_px, params.components, seed.wrapping_add(1))?;

    let mut trace = Vec::with_capacity(2 * params.iterations);
    let mut rounds = 0;
    for round in 0..params.iterations {
        if round > 0 {
            let (fg_px, bg_px) = split_colors(&z, &labels);
            fg = fg.refit(&fg_px);
            bg = bg.refit(&bg_px);
        }
        trace.push(grabcut_energy(image, &labels, Some(&fg), Some(&bg), params.gamma, beta));

        let graph = build_graph(image, trimap, &fg, &bg, params.gamma, beta)?;
        let cut = max_flow(&graph);
        let next: Vec<bool> = trimap
            .labels()
            .iter()
            .zip(&cut.source_side)
            .map(|(label, &src)| match label {
                SeedLabel::HardFg => true,
                SeedLabel::HardBg => false,
                _ => src,
            })
            .collect();
        trace.push(grabcut_energy(image, &next, Some(&fg), Some(&bg), params.gamma, beta));
        rounds += 1;
        let settled = next == labels;
        labels = next;
        if settled {
            break;
        }
    }

    Ok(GrabCutOutcome {
        mask: BinaryMask::new(w, h, labels)?,
        energy_trace: trace,
        rounds,
        diagnostic: None,
        fg_model: Some(fg),
        bg_model: Some(bg),
        beta,
    })
}
