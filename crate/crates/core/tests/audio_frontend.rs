use beatpf::frontend::{flux_activations, read_wav};
use beatpf::synth::{click_train, TempoScript};

fn is_local_max(b: &[f64], k: usize) -> bool {
    (k == 0 || b[k] >= b[k - 1]) && (k + 1 == b.len() || b[k] >= b[k + 1])
}

#[test]
fn click_train_peaks_at_click_frames() {
    let script = TempoScript::constant(120.0, 10.0);
    let clicks = script.nominal_beat_times();
    let audio = click_train(&clicks, script.duration_s, 44_100);
    let b = flux_activations(&audio, 0.01).unwrap();
    assert_eq!(b.len(), 1000);
    assert!(b.iter().all(|x| (0.0..=1.0).contains(x)));

    for t in &clicks {
        let k = (t * 100.0).round() as usize;
        let lo = k.saturating_sub(1);
        let hi = (k + 1).min(b.len() - 1);
        let peak = (lo..=hi).max_by(|&i, &j| b[i].total_cmp(&b[j])).unwrap();
        assert!(is_local_max(&b, peak), "click at {t}: frame {peak} not a local max");
        assert!(b[peak] > 0.5, "click at {t}: weak peak {}", b[peak]);
    }
    // nothing between clicks
    for (k, x) in b.iter().enumerate() {
        if clicks.iter().all(|t| (k as f64 - t * 100.0).abs() > 5.0) {
            assert!(*x < 0.05, "frame {k}: {x}");
        }
    }
}

#[test]
fn wav_roundtrip_through_flux() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clicks.wav");
    let script = TempoScript::constant(100.0, 4.0);
    let audio = click_train(&script.nominal_beat_times(), script.duration_s, 22_050);

    let format = hound::WavSpec {
        channels: 2,
        sample_rate: 22_050,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&path, format).unwrap();
    for &s in &audio.samples {
        let v = (s * i16::MAX as f32) as i16;
        w.write_sample(v).unwrap();
        w.write_sample(v).unwrap();
    }
    w.finalize().unwrap();

    let decoded = read_wav(&path).unwrap();
    assert_eq!(decoded.sample_rate, 22_050);
    assert_eq!(decoded.samples.len(), audio.samples.len());
    let direct = flux_activations(&audio, 0.01).unwrap();
    let via_file = flux_activations(&decoded, 0.01).unwrap();
    assert_eq!(direct.len(), via_file.len());
    let peaks = |b: &[f64]| -> Vec<usize> { (0..b.len()).filter(|&k| b[k] > 0.5 && is_local_max(b, k)).collect() };
    assert_eq!(peaks(&direct), peaks(&via_file));
}
