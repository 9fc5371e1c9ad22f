use std::sync::Arc;

use chrono::{TimeZone, Utc};
use latentmap::autoencoder::{AutoencoderModel, DEFAULT_LAYER_DIMS};
use latentmap::iml::{train, ExampleStore, MapperConfig, MapperVariant, TrainingExample};
use latentmap::osc::{decode_packet, encode_message, OscPacket};
use latentmap::session::{step, Command, Effect, Input, SessionState, SketchEvent};
use latentmap::sketch::{rasterize, synthetic_frames, DEFAULT_RESOLUTION};
use latentmap::synth::{emit_latent_osc, latent_to_params, render, SynthState, DEFAULT_LATENT_ADDRESS};
use latentmap::{AudioLatent, AUDIO_LATENT_DIM, SKETCH_LATENT_DIM};

#[test]
fn sketch_to_sound_dimensions() {
    assert_eq!(SKETCH_LATENT_DIM, 32);
    assert_eq!(AUDIO_LATENT_DIM, 16);
    assert_eq!(DEFAULT_LAYER_DIMS, [4096, 256, 32, 256, 4096]);

    let encoder = AutoencoderModel::new(&DEFAULT_LAYER_DIMS, 0.05, 1).unwrap();
    let frames = synthetic_frames(6, 3);
    let now = Utc.timestamp_opt(0, 0).unwrap();
    let mut store = ExampleStore::new();
    for (i, f) in frames.iter().enumerate() {
        let z = encoder.encode(&rasterize(f, DEFAULT_RESOLUTION).unwrap()).unwrap();
        assert_eq!(z.as_slice().len(), 32);
        let target = AudioLatent::zeros().with_dim(i, 0.9).unwrap();
        store.add_example(TrainingExample::new(z, target, now));
    }

    for variant in [MapperVariant::KnnIdw, MapperVariant::Mlp] {
        let config = MapperConfig { variant, ..MapperConfig::default() };
        let (mapper, _) = train(&store, &config).unwrap();
        let z = encoder.encode(&rasterize(&frames[0], DEFAULT_RESOLUTION).unwrap()).unwrap();
        let a = mapper.map(&z);
        assert_eq!(a.as_slice().len(), 16);

        let (block, _) = render(&SynthState::default(), &latent_to_params(&a), 512, 48_000).unwrap();
        assert_eq!(block.samples.len(), 512);
        let msg = emit_latent_osc(&a, DEFAULT_LATENT_ADDRESS).unwrap();
        assert_eq!(msg.args.len(), 16);
        let OscPacket::Message(back) = decode_packet(&encode_message(&msg).unwrap()).unwrap() else {
            panic!("expected a message");
        };
        assert_eq!(back.args.len(), 16);
    }
}

#[test]
fn session_workflow_end_to_end() {
    let encoder = Arc::new(AutoencoderModel::new(&DEFAULT_LAYER_DIMS, 0.05, 2).unwrap());
    let mut s = SessionState::new(encoder, MapperConfig::default(), 42).unwrap();
    let at = Utc.timestamp_opt(0, 0).unwrap();
    let sketch = |event| Input::Sketch { event, at };

    let mut inputs = vec![Input::Command(Command::Record)];
    for (x0, x1) in [(0.1, 0.9), (0.9, 0.1)] {
        inputs.push(Input::Command(Command::Randomise));
        inputs.push(sketch(SketchEvent::CanvasClear));
        inputs.push(sketch(SketchEvent::StrokeBegin { x: x0, y: 0.2, t: 0.0 }));
        inputs.push(sketch(SketchEvent::StrokePoint { x: x1, y: 0.8, t: 10.0 }));
        inputs.push(sketch(SketchEvent::StrokeEnd { t: 20.0 }));
    }
    inputs.extend([
        Input::Command(Command::StopRecord),
        Input::Command(Command::Train),
        Input::Command(Command::Run),
        sketch(SketchEvent::CanvasClear),
        sketch(SketchEvent::StrokeBegin { x: 0.1, y: 0.2, t: 0.0 }),
        sketch(SketchEvent::StrokePoint { x: 0.9, y: 0.8, t: 10.0 }),
        sketch(SketchEvent::StrokeEnd { t: 20.0 }),
    ]);
    let mut all = Vec::new();
    for input in inputs {
        let (next, fx) = step(s, input);
        s = next;
        all.extend(fx);
    }
    assert_eq!(s.store.len(), 2);
    // redrawing the first recorded sketch recalls its latent
    assert_eq!(s.current_latent, s.store.examples()[0].target);
    assert!(all.iter().any(|e| matches!(e, Effect::Trained { .. })));
    assert!(!all.iter().any(|e| matches!(e, Effect::Rejected { .. } | Effect::Error { .. })));
}
