use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::promptkit::Prompt;

pub const SMALL_IMAGE_TOKENS: u64 = 258;
pub const LARGE_IMAGE_TOKENS: u64 = 1290;
pub const IMAGE_TILE_PX: usize = 384;
pub const CHARS_PER_TOKEN: usize = 4;

/// Tokens billed for one image: small images are a single tile, anything
/// reaching 384 px on either axis adds four crops.
pub fn estimate_image_tokens(width_px: usize, height_px: usize) -> u64 {
    if width_px < IMAGE_TILE_PX && height_px < IMAGE_TILE_PX {
        SMALL_IMAGE_TOKENS
    } else {
        LARGE_IMAGE_TOKENS
    }
}

/// Text tokens estimated as characters / 4, rounded up.
pub fn estimate_text_tokens(chars: usize) -> u64 {
    chars.div_ceil(CHARS_PER_TOKEN) as u64
}

/// Prices in currency units per 1,000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub text_per_1k: f64,
    pub image_per_1k: f64,
}

impl Pricing {
    fn validate(&self, model: &str) -> Result<()> {
        if !(self.text_per_1k >= 0.0 && self.image_per_1k >= 0.0) {
            return Err(Error::Config(format!("pricing for {model} must be non-negative")));
        }
        Ok(())
    }
}

/// Pricing rows keyed by model name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PricingTable(pub BTreeMap<String, Pricing>);

impl PricingTable {
    pub fn get(&self, model: &str) -> Result<&Pricing> {
        let p = self
            .0
            .get(model)
            .ok_or_else(|| Error::Config(format!("no pricing row for model {model}")))?;
        p.validate(model)?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub text_tokens: u64,
    pub image_tokens: u64,
    pub images: usize,
    pub text_cost: f64,
    pub image_cost: f64,
    pub total: f64,
}

pub fn estimate_cost(prompt: &Prompt, pricing: &Pricing) -> CostEstimate {
    let text_tokens = estimate_text_tokens(prompt.text_chars());
    let (images, image_tokens) = prompt
        .image_parts()
        .fold((0, 0), |(n, t), i| (n + 1, t + estimate_image_tokens(i.width_px, i.height_px)));
    let text_cost = text_tokens as f64 / 1000.0 * pricing.text_per_1k;
    let image_cost = image_tokens as f64 / 1000.0 * pricing.image_per_1k;
    CostEstimate {
        text_tokens,
        image_tokens,
        images,
        text_cost,
        image_cost,
        total: text_cost + image_cost,
    }
}
