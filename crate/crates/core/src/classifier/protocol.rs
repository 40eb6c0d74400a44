//! Newline-delimited JSON messages exchanged with an external classifier process.
//!
//! ```text
//! server -> client (once, on start): {"hello":{"name":<string>,"classes":<int>}}
//! client -> server:                  {"id":<int>,"width":<int>,"height":<int>,"images":[<base64 RGB8>, ...]}
//! server -> client:                  {"id":<int>,"probs":[[<float> x classes], ...]}
//!                              or    {"id":<int>,"error":<string>}
//! ```
//!
//! One request is outstanding at a time and ids count up from 0.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::imaging::Image;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub hello: HelloBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelloBody {
    pub name: String,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: u64,
    pub width: usize,
    pub height: usize,
    pub images: Vec<String>,
}

impl Request {
    pub fn encode(id: u64, images: &[Image]) -> Self {
        let (width, height) = images.first().map_or((0, 0), |i| (i.width(), i.height()));
        Self {
            id,
            width,
            height,
            images: images.iter().map(|im| STANDARD.encode(im.to_raw())).collect(),
        }
    }

    /// Decodes the base64 payloads back into images.
    pub fn decode_images(&self) -> Result<Vec<Image>, String> {
        self.images
            .iter()
            .enumerate()
            .map(|(i, b64)| {
                let raw = STANDARD
                    .decode(b64)
                    .map_err(|e| format!("image {i}: bad base64: {e}"))?;
                Image::from_raw(self.width, self.height, &raw).map_err(|e| format!("image {i}: {e}"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Probs { id: u64, probs: Vec<Vec<f64>> },
    Error { id: Option<u64>, error: String },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_format() {
        let img = Image::new(2, 1, vec![[1, 2, 3], [255, 0, 128]]).unwrap();
        let req = Request::encode(0, &[img.clone()]);
        let line = serde_json::to_string(&req).unwrap();
        assert_eq!(line, r#"{"id":0,"width":2,"height":1,"images":["AQID/wCA"]}"#);
        assert_eq!(req.decode_images().unwrap(), vec![img]);
    }

    #[test]
    fn response_variants() {
        let ok: Response = serde_json::from_str(r#"{"id":3,"probs":[[0.5,0.5]]}"#).unwrap();
        assert_eq!(ok, Response::Probs { id: 3, probs: vec![vec![0.5, 0.5]] });
        let err: Response = serde_json::from_str(r#"{"id":3,"error":"boom"}"#).unwrap();
        assert!(matches!(err, Response::Error { .. }));
        assert!(serde_json::from_str::<Response>(r#"{"nope":1}"#).is_err());
    }

    #[test]
    fn hello_is_strict() {
        assert!(serde_json::from_str::<Hello>(r#"{"hello":{"name":"x","classes":2}}"#).is_ok());
        assert!(serde_json::from_str::<Hello>(r#"{"hello":{"name":"x"}}"#).is_err());
    }
}
