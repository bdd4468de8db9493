//! Compression-effect analysis: ordinary least squares on paired scores,
//! score-bin summaries, shift counts, the compression verdict, and an SVG
//! scatter plot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{pearson, ExperimentError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("x values are constant; regression slope is undefined")]
    ConstantX,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("scale ({0}, {1}) is not an increasing interval")]
    BadScale(f64, f64),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

/// Ordinary-least-squares line fit; `r` is `None` when the response has zero
/// variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r: Option<f64>,
    pub n: usize,
}

impl RegressionFit {
    /// Predicted y at `x`.
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fit `ys ~ slope * xs + intercept` by ordinary least squares.
pub fn linreg(xs: &[f64], ys: &[f64]) -> Result<RegressionFit, AnalysisError> {
    if xs.len() != ys.len() {
        return Err(AnalysisError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(AnalysisError::TooFewPoints {
            need: 2,
            got: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
    }
    if vx == 0.0 {
        return Err(AnalysisError::ConstantX);
    }
    let slope = cov / vx;
    let intercept = my - slope * mx;
    let r = pearson(xs, ys)?;
    Ok(RegressionFit {
        slope,
        intercept,
        r,
        n: xs.len(),
    })
}

// ---------------------------------------------------------------------------
// Bin statistics and shifts
// ---------------------------------------------------------------------------

/// Moments of one score bin; the moment fields are `None` exactly when the
/// bin is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub n: usize,
    pub mean_ooc: Option<f64>,
    pub std_ooc: Option<f64>,
    pub mean_ic: Option<f64>,
    pub std_ic: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn bin_of(ooc: &[f64], ic: &[f64], keep: impl Fn(f64) -> bool) -> BinStats {
    let mut os = Vec::new();
    let mut is = Vec::new();
    for (&o, &i) in ooc.iter().zip(ic) {
        if keep(o) {
            os.push(o);
            is.push(i);
        }
    }
    if os.is_empty() {
        return BinStats {
            n: 0,
            mean_ooc: None,
            std_ooc: None,
            mean_ic: None,
            std_ic: None,
        };
    }
    let (mo, so) = mean_std(&os);
    let (mi, si) = mean_std(&is);
    BinStats {
        n: os.len(),
        mean_ooc: Some(mo),
        std_ooc: Some(so),
        mean_ic: Some(mi),
        std_ic: Some(si),
    }
}

/// Split pairs into two bins by out-of-context score (below `boundary`, and
/// at or above it) and report the moments of both score sets per bin.
/// Standard deviations are population deviations.
pub fn bin_stats(
    ooc: &[f64],
    ic: &[f64],
    boundary: f64,
) -> Result<(BinStats, BinStats), AnalysisError> {
    if ooc.len() != ic.len() {
        return Err(AnalysisError::LengthMismatch {
            left: ooc.len(),
            right: ic.len(),
        });
    }
    if ooc.is_empty() {
        return Err(AnalysisError::TooFewPoints { need: 1, got: 0 });
    }
    let lower = bin_of(ooc, ic, |o| o < boundary);
    let upper = bin_of(ooc, ic, |o| o >= boundary);
    Ok((lower, upper))
}

/// How many pairs the in-context score raised, lowered, or left unchanged,
/// with the mean out-of-context score of the raised and lowered sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftCounts {
    pub raised: usize,
    pub lowered: usize,
    pub unchanged: usize,
    pub raised_ooc_mean: Option<f64>,
    pub lowered_ooc_mean: Option<f64>,
}

/// Compare paired scores; differences under `1e-12` in magnitude count as
/// unchanged.
pub fn shift_counts(ooc: &[f64], ic: &[f64]) -> Result<ShiftCounts, AnalysisError> {
    if ooc.len() != ic.len() {
        return Err(AnalysisError::LengthMismatch {
            left: ooc.len(),
            right: ic.len(),
        });
    }
    if ooc.is_empty() {
        return Err(AnalysisError::TooFewPoints { need: 1, got: 0 });
    }
    let mut raised = Vec::new();
    let mut lowered = Vec::new();
    let mut unchanged = 0usize;
    for (&o, &i) in ooc.iter().zip(ic) {
        if (i - o).abs() < 1e-12 {
            unchanged += 1;
        } else if i > o {
            raised.push(o);
        } else {
            lowered.push(o);
        }
    }
    let mean_of = |v: &Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok(ShiftCounts {
        raised: raised.len(),
        lowered: lowered.len(),
        unchanged,
        raised_ooc_mean: mean_of(&raised),
        lowered_ooc_mean: mean_of(&lowered),
    })
}

// ---------------------------------------------------------------------------
// Compression verdict
// ---------------------------------------------------------------------------

/// Whether a fit shows the compression effect: slope below one with the
/// fixed point of the mapping strictly inside the score scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionVerdict {
    pub compressive: bool,
    pub slope: f64,
    /// `intercept / (1 - slope)`; absent when the slope is exactly one.
    pub fixed_point: Option<f64>,
}

/// Judge a regression fit against the score scale `(lo, hi)`.
pub fn compression_verdict(
    fit: &RegressionFit,
    scale: (f64, f64),
) -> Result<CompressionVerdict, AnalysisError> {
    let (lo, hi) = scale;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(AnalysisError::BadScale(lo, hi));
    }
    let fixed_point = (fit.slope != 1.0).then(|| fit.intercept / (1.0 - fit.slope));
    let compressive = fit.slope < 1.0
        && fixed_point.map_or(false, |fp| fp > lo && fp < hi);
    Ok(CompressionVerdict {
        compressive,
        slope: fit.slope,
        fixed_point,
    })
}

/// Everything the `analyze` step reports, serialized as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r: Option<f64>,
    pub n: usize,
    pub lower_bin: BinStats,
    pub upper_bin: BinStats,
    pub shifts: ShiftCounts,
    pub verdict: CompressionVerdict,
}

/// Run the full analysis over paired out-of-context / in-context scores.
pub fn summarize(
    ooc: &[f64],
    ic: &[f64],
    boundary: f64,
    scale: (f64, f64),
) -> Result<AnalysisSummary, AnalysisError> {
    let fit = linreg(ooc, ic)?;
    let (lower_bin, upper_bin) = bin_stats(ooc, ic, boundary)?;
    let shifts = shift_counts(ooc, ic)?;
    let verdict = compression_verdict(&fit, scale)?;
    Ok(AnalysisSummary {
        slope: fit.slope,
        intercept: fit.intercept,
        r: fit.r,
        n: fit.n,
        lower_bin,
        upper_bin,
        shifts,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Scatter plot
// ---------------------------------------------------------------------------

/// Appearance settings for [`render_scatter`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterOptions {
    pub width: u32,
    pub height: u32,
    /// Data range drawn on both axes.
    pub scale: (f64, f64),
    pub x_label: String,
    pub y_label: String,
    /// Optional comment embedded near the top of the document (for
    /// timestamps or provenance); omitted entirely when `None`.
    pub comment: Option<String>,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions {
            width: 640,
            height: 480,
            scale: (0.0, 1.0),
            x_label: "out-of-context score".to_string(),
            y_label: "in-context score".to_string(),
            comment: None,
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

const MARGIN: f64 = 56.0;

/// Render paired scores as an SVG scatter plot with a dashed identity line
/// and a solid regression line.
pub fn render_scatter(
    ooc: &[f64],
    ic: &[f64],
    fit: &RegressionFit,
    options: &ScatterOptions,
) -> Result<String, AnalysisError> {
    if ooc.len() != ic.len() {
        return Err(AnalysisError::LengthMismatch {
            left: ooc.len(),
            right: ic.len(),
        });
    }
    if ooc.is_empty() {
        return Err(AnalysisError::TooFewPoints { need: 1, got: 0 });
    }
    let (lo, hi) = options.scale;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(AnalysisError::BadScale(lo, hi));
    }
    let w = options.width as f64;
    let h = options.height as f64;
    let plot_w = w - 2.0 * MARGIN;
    let plot_h = h - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - lo) / (hi - lo) * plot_w;
    let py = |y: f64| h - MARGIN - (y - lo) / (hi - lo) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        options.width, options.height, options.width, options.height
    ));
    if let Some(comment) = &options.comment {
        // "--" is illegal inside XML comments
        svg.push_str(&format!("<!-- {} -->\n", comment.replace("--", "- -")));
    }
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        options.width, options.height
    ));
    svg.push_str(&format!(
        "<clipPath id=\"plot-area\"><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/></clipPath>\n",
        MARGIN, MARGIN, plot_w, plot_h
    ));
    svg.push_str(&format!(
        "<rect class=\"frame\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>\n",
        MARGIN, MARGIN, plot_w, plot_h
    ));

    // ticks at lo, midpoint, hi on both axes
    for t in [lo, (lo + hi) / 2.0, hi] {
        let x = px(t);
        let y = py(t);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            x,
            h - MARGIN,
            x,
            h - MARGIN + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            x,
            h - MARGIN + 18.0,
            xml_escape(&format!("{t:.2}"))
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            MARGIN - 5.0,
            y,
            MARGIN,
            y
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            MARGIN - 8.0,
            y + 4.0,
            xml_escape(&format!("{t:.2}"))
        ));
    }

    // axis labels
    svg.push_str(&format!(
        "<text class=\"x-label\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        w / 2.0,
        h - 14.0,
        xml_escape(&options.x_label)
    ));
    svg.push_str(&format!(
        "<text class=\"y-label\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
        16.0,
        h / 2.0,
        h / 2.0,
        xml_escape(&options.y_label)
    ));

    // dashed identity line and solid regression line, clipped to the frame
    svg.push_str(&format!(
        "<line class=\"identity\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        px(lo),
        py(lo),
        px(hi),
        py(hi)
    ));
    svg.push_str(&format!(
        "<line class=\"regression\" clip-path=\"url(#plot-area)\" x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        px(lo),
        py(fit.predict(lo)),
        px(hi),
        py(fit.predict(hi))
    ));

    for (&o, &i) in ooc.iter().zip(ic) {
        svg.push_str(&format!(
            "<circle class=\"point\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n",
            px(o.clamp(lo, hi)),
            py(i.clamp(lo, hi))
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
