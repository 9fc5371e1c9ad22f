//! JSON messages exchanged with the browser UI, one per WebSocket text frame.

use chrono::{DateTime, Utc};
use latentmap::session::{Command, Effect, Input, SessionMode, SketchEvent};
use latentmap::AudioLatent;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Record,
    StopRecord,
    Randomise,
    Train,
    Run,
    Stop,
    Clear,
}

impl From<CommandName> for Command {
    fn from(name: CommandName) -> Self {
        match name {
            CommandName::Record => Command::Record,
            CommandName::StopRecord => Command::StopRecord,
            CommandName::Randomise => Command::Randomise,
            CommandName::Train => Command::Train,
            CommandName::Run => Command::Run,
            CommandName::Stop => Command::Stop,
            CommandName::Clear => Command::Clear,
        }
    }
}

/// UI to engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    StrokeBegin { x: f64, y: f64, t: f64 },
    StrokePoint { x: f64, y: f64, t: f64 },
    StrokeEnd { t: f64 },
    CanvasClear,
    Command { name: CommandName },
    SetLatent { dim: usize, value: f64 },
}

impl ClientMessage {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn into_input(self, at: DateTime<Utc>) -> Input {
        let sketch = |event| Input::Sketch { event, at };
        match self {
            ClientMessage::StrokeBegin { x, y, t } => sketch(SketchEvent::StrokeBegin { x, y, t }),
            ClientMessage::StrokePoint { x, y, t } => sketch(SketchEvent::StrokePoint { x, y, t }),
            ClientMessage::StrokeEnd { t } => sketch(SketchEvent::StrokeEnd { t }),
            ClientMessage::CanvasClear => sketch(SketchEvent::CanvasClear),
            ClientMessage::Command { name } => Input::Command(name.into()),
            ClientMessage::SetLatent { dim, value } => Input::Command(Command::SetLatentDim { dim, value }),
        }
    }
}

/// Engine to UI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State {
        mode: SessionMode,
        latent: AudioLatent,
        example_count: usize,
    },
    Rejected { reason: String },
    Trained { loss: f64 },
}

impl ServerMessage {
    /// The UI-facing form of an effect, if it has one.
    pub fn from_effect(effect: &Effect) -> Option<Self> {
        match effect {
            Effect::Snapshot(s) => Some(ServerMessage::State {
                mode: s.mode,
                latent: s.latent,
                example_count: s.example_count,
            }),
            Effect::Rejected { reason } => Some(ServerMessage::Rejected {
                reason: reason.clone(),
            }),
            Effect::Error { message } => Some(ServerMessage::Rejected {
                reason: message.clone(),
            }),
            Effect::Trained { loss } => Some(ServerMessage::Trained { loss: *loss }),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use latentmap::session::Snapshot;

    #[test]
    fn parses_every_client_frame() {
        let cases = [
            (r#"{"type":"stroke_begin","x":0.41,"y":0.27,"t":12}"#, ClientMessage::StrokeBegin { x: 0.41, y: 0.27, t: 12.0 }),
            (r#"{"type":"stroke_point","x":0.5,"y":0.3,"t":20}"#, ClientMessage::StrokePoint { x: 0.5, y: 0.3, t: 20.0 }),
            (r#"{"type":"stroke_end","t":95}"#, ClientMessage::StrokeEnd { t: 95.0 }),
            (r#"{"type":"canvas_clear"}"#, ClientMessage::CanvasClear),
            (r#"{"type":"command","name":"stop_record"}"#, ClientMessage::Command { name: CommandName::StopRecord }),
            (r#"{"type":"command","name":"randomise"}"#, ClientMessage::Command { name: CommandName::Randomise }),
            (r#"{"type":"set_latent","dim":3,"value":0.5}"#, ClientMessage::SetLatent { dim: 3, value: 0.5 }),
        ];
        for (text, expected) in cases {
            assert_eq!(ClientMessage::parse(text).unwrap(), expected, "{text}");
        }
    }

    #[test]
    fn rejects_unknown_frames() {
        for bad in [
            r#"{"type":"command","name":"explode"}"#,
            r#"{"type":"teleport"}"#,
            r#"{"type":"stroke_end"}"#,
            r#"{"type":"set_latent","dim":-1,"value":0.5}"#,
            "not json",
        ] {
            assert!(ClientMessage::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn command_names_map() {
        let at = Utc::now();
        assert_eq!(
            ClientMessage::Command { name: CommandName::Train }.into_input(at),
            Input::Command(Command::Train)
        );
        assert_eq!(
            ClientMessage::SetLatent { dim: 2, value: -0.5 }.into_input(at),
            Input::Command(Command::SetLatentDim { dim: 2, value: -0.5 })
        );
    }

    #[test]
    fn state_frame_shape() {
        let msg = ServerMessage::from_effect(&Effect::Snapshot(Snapshot {
            mode: SessionMode::Running,
            latent: AudioLatent::zeros().with_dim(1, 0.5).unwrap(),
            example_count: 3,
        }))
        .unwrap();
        let expected = format!(
            r#"{{"type":"state","mode":"running","latent":[0.0,0.5{}],"example_count":3}}"#,
            ",0.0".repeat(14)
        );
        assert_eq!(msg.to_json(), expected);
        assert_eq!(
            ServerMessage::Trained { loss: 0.25 }.to_json(),
            r#"{"type":"trained","loss":0.25}"#
        );
        assert_eq!(
            ServerMessage::Rejected { reason: "no mapper".into() }.to_json(),
            r#"{"type":"rejected","reason":"no mapper"}"#
        );
        assert_eq!(ServerMessage::from_effect(&Effect::TrainMapper), None);
    }
}
