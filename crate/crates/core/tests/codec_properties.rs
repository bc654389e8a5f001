use std::io::Cursor;

use glove_core::actuator::{
    decode_frame, decode_patterns, deserialize_chain, encode_frame, encode_patterns, parse_tagf,
    read_tagf, serialize_chain, write_tagf, ActuatorFrame, ChainStream, CHANNELS,
};
use glove_core::tactile::TAXEL_COUNT;
use glove_core::{TaxelPattern, TaxelState};
use proptest::prelude::*;

fn pattern() -> impl Strategy<Value = TaxelPattern> {
    prop::collection::vec(
        prop_oneof![
            Just(TaxelState::Neutral),
            Just(TaxelState::Protrude),
            Just(TaxelState::Retract)
        ],
        TAXEL_COUNT,
    )
    .prop_map(|s| TaxelPattern::from_states(&s).unwrap())
}

fn chain() -> impl Strategy<Value = Vec<TaxelPattern>> {
    prop::collection::vec(pattern(), 1..=5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn frame_round_trip(p in pattern(), id in 0usize..5) {
        let frame = encode_frame(&p, id);
        prop_assert_eq!(decode_frame(&frame).unwrap(), p);
    }

    #[test]
    fn no_forbidden_drive(p in pattern()) {
        let bits = encode_frame(&p, 0).channel_bits;
        for k in 0..TAXEL_COUNT {
            prop_assert!(!(bits[2 * k] && bits[2 * k + 1]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn chain_round_trip(patterns in chain()) {
        let stream = encode_patterns(&patterns).unwrap();
        prop_assert_eq!(stream.payload.len(), CHANNELS * patterns.len());
        prop_assert_eq!(stream.module_count, patterns.len());
        prop_assert_eq!(decode_patterns(&stream).unwrap(), patterns);
    }

    #[test]
    fn shuffled_frames_serialize_identically(patterns in chain(), seed in any::<u64>()) {
        let frames: Vec<ActuatorFrame> =
            patterns.iter().enumerate().map(|(i, p)| encode_frame(p, i)).collect();
        let mut shuffled = frames.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        prop_assert_eq!(serialize_chain(&shuffled).unwrap(), serialize_chain(&frames).unwrap());
        prop_assert_eq!(deserialize_chain(&serialize_chain(&shuffled).unwrap()).unwrap(), frames);
    }

    #[test]
    fn words_round_trip(word in any::<u64>(), id in 0usize..5) {
        prop_assert_eq!(ActuatorFrame::from_word(id, word).to_word(), word);
    }

    #[test]
    fn record_file_round_trip(records in prop::collection::vec(chain(), 0..6)) {
        let streams: Vec<ChainStream> =
            records.iter().map(|c| encode_patterns(c).unwrap()).collect();
        let mut buf = Vec::new();
        write_tagf(&mut buf, &streams).unwrap();
        let expected: usize = streams.iter().map(|s| 7 + 8 * s.module_count).sum();
        prop_assert_eq!(buf.len(), expected);
        prop_assert_eq!(read_tagf(Cursor::new(&buf)).unwrap(), streams.clone());
        prop_assert_eq!(parse_tagf(&buf).unwrap(), streams);
    }
}

#[test]
fn payload_length_for_each_module_count() {
    for n in 1..=5 {
        let stream = encode_patterns(&vec![TaxelPattern::neutral(); n]).unwrap();
        assert_eq!(stream.payload.len(), 64 * n);
        assert!(stream.payload.iter().all(|b| !b));
    }
    assert!(encode_patterns(&[]).is_err());
    assert!(encode_patterns(&[TaxelPattern::neutral(); 6]).is_err());
}

#[test]
fn first_taxel_protrusion_sets_channel_zero() {
    let mut states = vec![TaxelState::Neutral; TAXEL_COUNT];
    states[0] = TaxelState::Protrude;
    let frame = encode_frame(&TaxelPattern::from_states(&states).unwrap(), 0);
    assert_eq!(frame.to_word(), 1);
    // Channel 63 is shifted first, so channel 0 is the last payload bit.
    let stream = serialize_chain(&[frame]).unwrap();
    assert!(stream.payload[63]);
    assert_eq!(stream.payload.iter().filter(|b| **b).count(), 1);
}

#[test]
fn last_module_is_shifted_first() {
    let mut states = vec![TaxelState::Neutral; TAXEL_COUNT];
    states[31] = TaxelState::Retract;
    let marked = TaxelPattern::from_states(&states).unwrap();
    let stream = encode_patterns(&[TaxelPattern::neutral(), marked]).unwrap();
    // Module 1's channel 63 leads the payload.
    assert!(stream.payload[0]);
    assert_eq!(stream.payload.iter().filter(|b| **b).count(), 1);
}

#[test]
fn odd_payload_rejected() {
    let stream = ChainStream {
        payload: vec![false; 321],
        module_count: 5,
        latched: true,
    };
    let err = deserialize_chain(&stream).unwrap_err();
    assert!(err.to_string().starts_with("payload not a multiple of 64"));
}

#[test]
fn both_electrodes_high_rejected() {
    let frame = ActuatorFrame::from_word(0, 0b11 << 6);
    assert!(decode_frame(&frame).is_err());
}

#[test]
fn duplicate_module_ids_rejected() {
    let f = encode_frame(&TaxelPattern::neutral(), 0);
    assert!(serialize_chain(&[f, f]).is_err());
    let g = encode_frame(&TaxelPattern::neutral(), 2);
    assert!(serialize_chain(&[f, g]).is_err());
}

#[test]
fn record_framing() {
    let stream = encode_patterns(&[TaxelPattern::neutral()]).unwrap();
    let rec = stream.to_record().unwrap();
    assert_eq!(&rec[..4], b"TAGF");
    assert_eq!(rec[4], 0x01);
    assert_eq!(rec[5], 1);
    assert_eq!(rec.len(), 7 + 8);
    assert_eq!(*rec.last().unwrap(), 0xFF);
    assert!(parse_tagf(&rec[..rec.len() - 1]).is_err());
    let mut bad = rec.clone();
    bad[0] = b'X';
    assert!(parse_tagf(&bad).is_err());
}
