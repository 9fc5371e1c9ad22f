//! OSC control over UDP in, latent updates over UDP out.

mod common;

use std::net::UdpSocket;
use std::time::Duration;

use common::{small_state, spawn_engine};
use latentmap::osc::{decode_packet, encode_message, encode_packet, OscBundle, OscMessage, OscPacket, OscValue};
use latentmap::session::SessionMode;
use latentmap::AudioLatent;
use latentmap_engine::backend::OscSink;
use latentmap_engine::net::start_osc_control;
use latentmap_engine::Engine;

fn datagram(addr: &str, args: Vec<OscValue>) -> Vec<u8> {
    encode_message(&OscMessage::new(addr, args).unwrap()).unwrap()
}

#[test]
fn commands_over_udp() {
    let engine = spawn_engine(small_state());
    let server = start_osc_control("127.0.0.1:0".parse().unwrap(), engine.tx.clone()).unwrap();
    let client = UdpSocket::bind("127.0.0.1:0").unwrap();
    let to = server.local_addr();

    client
        .send_to(&datagram("/latent/set", vec![OscValue::Int32(3), OscValue::Float32(0.5)]), to)
        .unwrap();
    let z = engine.latents.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(z, AudioLatent::zeros().with_dim(3, 0.5).unwrap());

    client.send_to(&datagram("/cmd/randomise", vec![]), to).unwrap();
    let z = engine.latents.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_ne!(z.get(3), Some(0.5));

    // garbage and unknown addresses are dropped without harming the loop
    client.send_to(&[1, 2, 3], to).unwrap();
    client.send_to(&datagram("/cmd/fly", vec![]), to).unwrap();

    let bundle = OscPacket::Bundle(OscBundle {
        timetag: 1,
        elements: vec![
            OscMessage::new("/cmd/record", vec![]).unwrap().into(),
            OscMessage::new("/latent/set", vec![OscValue::Int32(0), OscValue::Float32(1.0)])
                .unwrap()
                .into(),
        ],
    });
    client.send_to(&encode_packet(&bundle).unwrap(), to).unwrap();
    let z = engine.latents.recv_timeout(Duration::from_secs(5)).unwrap();
    assert_eq!(z.get(0), Some(1.0));

    server.stop();
    let engine = engine.finish();
    assert_eq!(engine.state().mode, SessionMode::Recording);
}

#[test]
fn external_backend_emits_latent_messages() {
    let synth = UdpSocket::bind("127.0.0.1:0").unwrap();
    synth.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let sink = OscSink::new(synth.local_addr().unwrap(), "/rave/latent").unwrap();
    let (tx, handle) = Engine::new(small_state(), Box::new(sink)).spawn();
    let control = start_osc_control("127.0.0.1:0".parse().unwrap(), tx.clone()).unwrap();

    let client = UdpSocket::bind("127.0.0.1:0").unwrap();
    client.send_to(&datagram("/cmd/randomise", vec![]), control.local_addr()).unwrap();

    let mut buf = [0u8; 512];
    let n = synth.recv(&mut buf).unwrap();
    let OscPacket::Message(m) = decode_packet(&buf[..n]).unwrap() else {
        panic!("expected a message");
    };
    assert_eq!(m.address, "/rave/latent");
    assert_eq!(m.args.len(), 16);

    control.stop();
    tx.send(latentmap_engine::EngineMsg::Shutdown).unwrap();
    let engine = handle.join().unwrap();
    let sent: Vec<f32> = engine.state().current_latent.as_slice().iter().map(|&v| v as f32).collect();
    let got: Vec<f32> = m
        .args
        .iter()
        .map(|a| match a {
            OscValue::Float32(f) => *f,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    assert_eq!(got, sent);
}
