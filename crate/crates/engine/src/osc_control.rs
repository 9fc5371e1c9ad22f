//! OSC control surface: incoming messages become session commands.

use latentmap::osc::{OscMessage, OscPacket, OscValue};
use latentmap::session::Command;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("unknown control address {0}")]
    UnknownAddress(String),
    #[error("bad arguments for {0}")]
    BadArguments(String),
}

fn number(v: &OscValue) -> Option<f64> {
    match v {
        OscValue::Float32(f) => Some(f64::from(*f)),
        OscValue::Int32(i) => Some(f64::from(*i)),
        _ => None,
    }
}

pub fn message_to_command(msg: &OscMessage) -> Result<Command, ControlError> {
    let no_args = |cmd: Command| {
        if msg.args.is_empty() {
            Ok(cmd)
        } else {
            Err(ControlError::BadArguments(msg.address.clone()))
        }
    };
    match msg.address.as_str() {
        "/cmd/record" => no_args(Command::Record),
        "/cmd/stop_record" => no_args(Command::StopRecord),
        "/cmd/randomise" => no_args(Command::Randomise),
        "/cmd/train" => no_args(Command::Train),
        "/cmd/run" => no_args(Command::Run),
        "/cmd/stop" => no_args(Command::Stop),
        "/cmd/clear" => no_args(Command::Clear),
        "/latent/set" => match msg.args.as_slice() {
            [OscValue::Int32(dim), value] if *dim >= 0 => number(value)
                .map(|value| Command::SetLatentDim {
                    dim: *dim as usize,
                    value,
                })
                .ok_or_else(|| ControlError::BadArguments(msg.address.clone())),
            _ => Err(ControlError::BadArguments(msg.address.clone())),
        },
        other => Err(ControlError::UnknownAddress(other.to_string())),
    }
}

/// Every command in a packet, bundles flattened in order.
pub fn packet_to_commands(packet: &OscPacket) -> Vec<Result<Command, ControlError>> {
    match packet {
        OscPacket::Message(m) => vec![message_to_command(m)],
        OscPacket::Bundle(b) => b.elements.iter().flat_map(packet_to_commands).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use latentmap::osc::OscBundle;

    fn msg(addr: &str, args: Vec<OscValue>) -> OscMessage {
        OscMessage::new(addr, args).unwrap()
    }

    #[test]
    fn command_addresses() {
        assert_eq!(message_to_command(&msg("/cmd/record", vec![])), Ok(Command::Record));
        assert_eq!(message_to_command(&msg("/cmd/run", vec![])), Ok(Command::Run));
        assert_eq!(message_to_command(&msg("/cmd/train", vec![])), Ok(Command::Train));
        assert_eq!(message_to_command(&msg("/cmd/randomise", vec![])), Ok(Command::Randomise));
        assert_eq!(
            message_to_command(&msg("/latent/set", vec![OscValue::Int32(3), OscValue::Float32(0.5)])),
            Ok(Command::SetLatentDim { dim: 3, value: 0.5 })
        );
    }

    #[test]
    fn bad_messages() {
        assert!(matches!(
            message_to_command(&msg("/cmd/dance", vec![])),
            Err(ControlError::UnknownAddress(_))
        ));
        assert!(matches!(
            message_to_command(&msg("/cmd/run", vec![OscValue::Int32(1)])),
            Err(ControlError::BadArguments(_))
        ));
        for args in [
            vec![OscValue::Float32(3.0), OscValue::Float32(0.5)],
            vec![OscValue::Int32(-1), OscValue::Float32(0.5)],
            vec![OscValue::Int32(1), OscValue::Str("x".into())],
            vec![OscValue::Int32(1)],
        ] {
            assert!(message_to_command(&msg("/latent/set", args)).is_err());
        }
    }

    #[test]
    fn bundles_flatten() {
        let p = OscPacket::Bundle(OscBundle {
            timetag: 1,
            elements: vec![
                msg("/cmd/record", vec![]).into(),
                OscPacket::Bundle(OscBundle {
                    timetag: 1,
                    elements: vec![msg("/cmd/stop_record", vec![]).into()],
                }),
            ],
        });
        assert_eq!(packet_to_commands(&p), vec![Ok(Command::Record), Ok(Command::StopRecord)]);
    }
}
