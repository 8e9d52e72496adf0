//! Editing parameters, their clip-dependent defaults and validation.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::ClipInfo;

/// Weights and window sizes of the trajectory filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub w_past: usize,
    pub w_future: usize,
    pub lam1: f64,
    pub lam2: f64,
    pub lam3: f64,
}

/// Crop composition constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FramingParams {
    pub ms_height_fraction: f64,
    pub headroom_fraction: f64,
    pub group_pad_fraction: f64,
    /// Width over height of every emitted crop.
    pub output_aspect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditParams {
    pub lambda_transition: f64,
    pub o_low: f64,
    pub o_high: f64,
    pub mu_overlap: f64,
    pub upsilon_overlap: f64,
    pub gamma_cut: f64,
    pub gamma_stay: f64,
    /// Soft maximum shot length, frames.
    pub m_stay: usize,
    pub min_shot_frames: usize,
    pub lookahead_frames: usize,
    pub alpha_continuity: f64,
    /// Gaze kernel width, pixels.
    pub sigma_gaze: f64,
    pub epsilon_gaze: f64,
    #[serde(flatten)]
    pub filter: FilterParams,
    #[serde(flatten)]
    pub framing: FramingParams,
    /// Smooth actor boxes before framing instead of the derived crops.
    pub smooth_actors: bool,
    /// Subtract each DP column's minimum as it is appended.
    pub renormalize: bool,
    /// Frame rate the frame-valued defaults were derived from.
    pub fps: f64,
}

impl EditParams {
    pub fn defaults(clip: &ClipInfo) -> Self {
        let half_second = clip.frames(0.5);
        EditParams {
            lambda_transition: 4.0,
            o_low: 0.3,
            o_high: 0.8,
            mu_overlap: 4.0,
            upsilon_overlap: 10.0,
            gamma_cut: 8.0,
            gamma_stay: 4.0,
            m_stay: clip.frames(10.0),
            min_shot_frames: clip.frames(1.5).max(1),
            lookahead_frames: 64,
            alpha_continuity: 7.0,
            sigma_gaze: 0.1 * clip.width,
            epsilon_gaze: 1e-3,
            filter: FilterParams {
                w_past: half_second,
                w_future: half_second,
                lam1: 1.0,
                lam2: 10.0,
                lam3: 100.0,
            },
            framing: FramingParams {
                ms_height_fraction: 0.55,
                headroom_fraction: 0.08,
                group_pad_fraction: 0.10,
                output_aspect: 16.0 / 9.0,
            },
            smooth_actors: false,
            renormalize: true,
            fps: clip.fps,
        }
    }

    /// Defaults for `clip` with `overrides` applied, validated.
    pub fn resolve(clip: &ClipInfo, overrides: &ParamOverrides) -> Result<Self> {
        let mut params = EditParams::defaults(clip);
        overrides.apply_to(&mut params);
        params.validate()?;
        Ok(params)
    }

    /// Logistic softness of the rhythm cost, in frames.
    pub fn rhythm_scale(&self) -> f64 {
        self.fps / 5.0
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("lambda_transition", self.lambda_transition),
            ("mu_overlap", self.mu_overlap),
            ("upsilon_overlap", self.upsilon_overlap),
            ("gamma_cut", self.gamma_cut),
            ("gamma_stay", self.gamma_stay),
            ("alpha_continuity", self.alpha_continuity),
            ("lam1", self.filter.lam1),
            ("lam2", self.filter.lam2),
            ("lam3", self.filter.lam3),
            ("headroom_fraction", self.framing.headroom_fraction),
            ("group_pad_fraction", self.framing.group_pad_fraction),
        ];
        for (field, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(param(field, format!("must be finite and >= 0, got {value}")));
            }
        }
        let positive = [
            ("sigma_gaze", self.sigma_gaze),
            ("epsilon_gaze", self.epsilon_gaze),
            ("ms_height_fraction", self.framing.ms_height_fraction),
            ("output_aspect", self.framing.output_aspect),
            ("fps", self.fps),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(param(field, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(0.0 <= self.o_low && self.o_low < self.o_high && self.o_high <= 1.0) {
            return Err(param(
                "o_low",
                format!("need 0 <= o_low < o_high <= 1, got {} and {}", self.o_low, self.o_high),
            ));
        }
        if self.lookahead_frames < 1 {
            return Err(param("lookahead_frames", "must be >= 1".into()));
        }
        if self.min_shot_frames < 1 {
            return Err(param("min_shot_frames", "must be >= 1".into()));
        }
        crate::editcost::rhythm_cap(&self.into())?;
        Ok(())
    }
}

fn param(field: &'static str, msg: String) -> Error {
    Error::Param { field, msg }
}

/// Partial parameter set as read from a params file or flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamOverrides {
    pub lambda_transition: Option<f64>,
    pub o_low: Option<f64>,
    pub o_high: Option<f64>,
    pub mu_overlap: Option<f64>,
    pub upsilon_overlap: Option<f64>,
    pub gamma_cut: Option<f64>,
    pub gamma_stay: Option<f64>,
    pub m_stay: Option<usize>,
    pub min_shot_frames: Option<usize>,
    pub lookahead_frames: Option<usize>,
    pub alpha_continuity: Option<f64>,
    pub sigma_gaze: Option<f64>,
    pub epsilon_gaze: Option<f64>,
    pub w_past: Option<usize>,
    pub w_future: Option<usize>,
    pub lam1: Option<f64>,
    pub lam2: Option<f64>,
    pub lam3: Option<f64>,
    pub ms_height_fraction: Option<f64>,
    pub headroom_fraction: Option<f64>,
    pub group_pad_fraction: Option<f64>,
    #[serde(deserialize_with = "aspect", skip_serializing_if = "Option::is_none")]
    pub output_aspect: Option<f64>,
    pub smooth_actors: Option<bool>,
    pub renormalize: Option<bool>,
}

macro_rules! apply_fields {
    ($src:expr, $dst:expr; $($field:ident => $($path:ident).+),* $(,)?) => {
        $( if let Some(v) = $src.$field { $dst.$($path).+ = v; } )*
    };
}

impl ParamOverrides {
    /// Set fields that fix the state of a running session (window sizes,
    /// run-length structure, framing) and so cannot change live.
    pub fn structural_fields(&self) -> Vec<&'static str> {
        let set = [
            ("lookahead_frames", self.lookahead_frames.is_some()),
            ("min_shot_frames", self.min_shot_frames.is_some()),
            ("m_stay", self.m_stay.is_some()),
            ("w_past", self.w_past.is_some()),
            ("w_future", self.w_future.is_some()),
            ("lam1", self.lam1.is_some()),
            ("lam2", self.lam2.is_some()),
            ("lam3", self.lam3.is_some()),
            ("ms_height_fraction", self.ms_height_fraction.is_some()),
            ("headroom_fraction", self.headroom_fraction.is_some()),
            ("group_pad_fraction", self.group_pad_fraction.is_some()),
            ("output_aspect", self.output_aspect.is_some()),
            ("smooth_actors", self.smooth_actors.is_some()),
            ("renormalize", self.renormalize.is_some()),
        ];
        set.into_iter().filter(|(_, on)| *on).map(|(name, _)| name).collect()
    }

    pub fn from_json(source: &str) -> Result<Self> {
        if source.trim().is_empty() {
            return Ok(ParamOverrides::default());
        }
        serde_json::from_str(source).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn apply_to(&self, p: &mut EditParams) {
        apply_fields!(self, p;
            lambda_transition => lambda_transition,
            o_low => o_low,
            o_high => o_high,
            mu_overlap => mu_overlap,
            upsilon_overlap => upsilon_overlap,
            gamma_cut => gamma_cut,
            gamma_stay => gamma_stay,
            m_stay => m_stay,
            min_shot_frames => min_shot_frames,
            lookahead_frames => lookahead_frames,
            alpha_continuity => alpha_continuity,
            sigma_gaze => sigma_gaze,
            epsilon_gaze => epsilon_gaze,
            w_past => filter.w_past,
            w_future => filter.w_future,
            lam1 => filter.lam1,
            lam2 => filter.lam2,
            lam3 => filter.lam3,
            ms_height_fraction => framing.ms_height_fraction,
            headroom_fraction => framing.headroom_fraction,
            group_pad_fraction => framing.group_pad_fraction,
            output_aspect => framing.output_aspect,
            smooth_actors => smooth_actors,
            renormalize => renormalize,
        );
    }

    /// Names of the fields that are set.
    pub fn set_fields(&self) -> Vec<String> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => {
                map.into_iter().filter(|(_, v)| !v.is_null()).map(|(k, _)| k).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Accepts `1.777` or `"16:9"`.
fn aspect<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Ratio(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(v)) => Ok(Some(v)),
        Some(Raw::Ratio(s)) => {
            let (w, h) = s
                .split_once(':')
                .ok_or_else(|| serde::de::Error::custom(format!("aspect `{s}` is not W:H")))?;
            let w: f64 = w.trim().parse().map_err(serde::de::Error::custom)?;
            let h: f64 = h.trim().parse().map_err(serde::de::Error::custom)?;
            Ok(Some(w / h))
        }
    }
}

/// Parses a params JSON object and resolves it against the clip.
pub fn load_params(source: &str, clip: &ClipInfo) -> Result<EditParams> {
    EditParams::resolve(clip, &ParamOverrides::from_json(source)?)
}
