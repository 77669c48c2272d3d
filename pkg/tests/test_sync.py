import math

import numpy as np
import pytest

from src.lora_phy_lab.channel.impairments import complex_awgn, transmit_through
from src.lora_phy_lab.channel.noise import NoiseSpec
from src.lora_phy_lab.config import ChirpParams, FrameConfig, ImpairmentSpec, SyncConfig
from src.lora_phy_lab.core.types import IqBuffer
from src.lora_phy_lab.exceptions import ConfigurationError, SyncFailure
from src.lora_phy_lab.frame.builder import build_frame, encode_payload_symbols
from src.lora_phy_lab.frame.decoder import decode_payload_symbols
from src.lora_phy_lab.core.chirp import modulate_symbol
from src.lora_phy_lab.sync.preamble import PreambleDetector, detect_preamble, ring_lock, ring_members
from src.lora_phy_lab.sync.synchronizer import (
    STAGES,
    FrameSynchronizer,
    SyncEstimate,
    SyncPhase,
    SyncState,
    genie_synchronize,
)

P = ChirpParams(sf=7)
N = P.n
PAYLOAD = b"synchronizer test payload"


def _received(tau_sto, tau_cfo, snr_db=None, payload=PAYLOAD, seed=0, **frame_kwargs):
    cfg = FrameConfig(payload=payload, **frame_kwargs)
    frame = build_frame(cfg, P).samples
    padded = IqBuffer(np.concatenate([frame, np.zeros(2 * N, dtype=np.complex128)]))
    noise = NoiseSpec() if snr_db is None else NoiseSpec.from_snr(snr_db)
    spec = ImpairmentSpec.from_offsets(P, tau_sto=tau_sto, tau_cfo=tau_cfo, noise=noise, seed=seed)
    return cfg, spec, transmit_through(padded, spec, P)


def test_ring_lock_majority():
    assert ring_lock([17, 17, 17, 18, 17, 17, 17], N) == 17
    assert ring_lock([17, 17, 40, 17, 17, 17, 17], N) is None
    assert ring_lock([127, 0, 0, 0, 1, 0, 127], N) == 0
    assert ring_lock([], N) is None


def test_ring_lock_with_a_lower_threshold():
    assert ring_lock([17, 17, 40, 17, 17, 17, 17], N, matches=4) == 17
    assert ring_lock([3, 90, 17, 17, 40, 18, 60], N, matches=4) is None
    assert ring_members([5, 90, 17, 17, 18, 17, 60], N, matches=4) == [2, 3, 4, 5]


def test_detector_needs_consecutive_matches():
    detector = PreambleDetector(N, 7)
    history = [17, 17, 17, 18, 17, 17, 17]
    results = [detector.push(value) for value in history]
    assert results[:-1] == [None] * 6
    assert results[-1] == 17
    detector.push(17, energy=0.0)
    assert len(detector.history) == 0


def test_detector_majority_over_a_longer_span():
    detector = PreambleDetector(N, 4, span=7)
    results = [detector.push(value) for value in [5, 90, 17, 17, 18, 17]]
    assert results == [None] * 5 + [17]
    assert detector.first_member() == 3


def test_detect_preamble_after_delay():
    _, _, rx = _received(20.0, 0.0)
    detection = detect_preamble(rx, P, matches=7)
    assert detection.found
    # noiseless preamble bins sit at (tau_cfo - tau_sto) mod N
    assert detection.s_pr == 108
    assert detection.discarded == 20
    assert detection.consumed_samples == 20


def test_detect_preamble_with_carrier_offset():
    _, _, rx = _received(20.0, 5.0)
    detection = detect_preamble(rx, P, matches=7)
    assert detection.s_pr == (5 - 20) % N
    assert detection.discarded == 15


def _corrupt_windows(samples, indices, symbol=60):
    damaged = samples.copy()
    for index in indices:
        damaged[index * N : (index + 1) * N] = modulate_symbol(symbol, P).samples
    return damaged


def test_majority_detection_survives_corrupted_windows():
    _, _, rx = _received(20.0, 0.0)
    damaged = _corrupt_windows(rx.samples, [1, 2])
    assert not detect_preamble(damaged, P, matches=7).found
    detection = detect_preamble(damaged, P, matches=4, span=7)
    assert detection.found
    assert detection.s_pr == 108
    assert detection.run_start == 0
    assert detection.discarded == 20


def test_detect_preamble_on_silence():
    detection = detect_preamble(np.zeros(20 * N, dtype=complex), P, matches=7)
    assert not detection.found
    assert detection.s_pr is None


def test_sync_state_only_moves_forward():
    state = SyncState()
    state.advance(SyncPhase.PREAMBLE_LOCKED)
    with pytest.raises(RuntimeError):
        state.advance(SyncPhase.DEMODULATING)
    state.advance(SyncPhase.INTEGER_CORRECTED)
    state.advance(SyncPhase.FRACTION_CORRECTED)
    state.advance(SyncPhase.DEMODULATING)
    with pytest.raises(RuntimeError):
        state.advance(SyncPhase.SEARCHING)
    state.reset()
    assert state.phase is SyncPhase.SEARCHING


def test_sync_estimate_decomposition():
    estimate = SyncEstimate.from_offsets(3, 20.25, -3.5, 12.0)
    assert (estimate.l_sto, estimate.lambda_sto) == (20, 0.25)
    assert (estimate.l_cfo, estimate.lambda_cfo) == (-4, 0.5)
    assert estimate.tau_cfo == pytest.approx(-3.5)
    assert estimate.as_dict()["tau_sto"] == pytest.approx(20.25)


def test_synchronize_zero_impairment_frame():
    cfg, _, rx = _received(0.0, 0.0)
    synchronizer = FrameSynchronizer(P, cfg)
    result = synchronizer.synchronize(rx)
    assert result.estimate.tau_sto == pytest.approx(0.0, abs=1e-9)
    assert result.estimate.tau_cfo == pytest.approx(0.0, abs=1e-9)
    assert np.array_equal(result.symbols, encode_payload_symbols(PAYLOAD, cfg, P))
    assert result.estimate.snr_est_db == math.inf
    assert result.stages["lambda_sto"] and not result.stages["netid"]
    assert set(result.stages) == set(STAGES)
    assert synchronizer.state.phase is SyncPhase.DEMODULATING
    assert decode_payload_symbols(result.symbols, cfg, P).payload == PAYLOAD


@pytest.mark.parametrize(
    "tau_sto, tau_cfo",
    [
        (20.0, 0.0),
        (37.3, 5.25),
        (5.5, -3.7),
        (100.25, 12.6),
        (64.75, -20.4),
        (3.9, 25.2),
        (127.6, -0.45),
    ],
)
def test_synchronize_noiseless_offsets(tau_sto, tau_cfo):
    cfg, _, rx = _received(tau_sto, tau_cfo)
    result = FrameSynchronizer(P, cfg).synchronize(rx)
    assert abs(result.estimate.tau_sto - tau_sto) <= 0.02
    assert abs(result.estimate.tau_cfo - tau_cfo) <= 0.02
    assert np.array_equal(result.symbols, encode_payload_symbols(PAYLOAD, cfg, P))
    decoded = decode_payload_symbols(result.symbols, cfg, P)
    assert decoded.crc_ok and decoded.payload == PAYLOAD


def test_synchronize_at_20_db():
    cfg, _, rx = _received(42.35, -7.8, snr_db=20.0, seed=4)
    result = FrameSynchronizer(P, cfg).synchronize(rx)
    assert abs(result.estimate.tau_sto - 42.35) <= 0.02
    assert abs(result.estimate.tau_cfo + 7.8) <= 0.02
    assert decode_payload_symbols(result.symbols, cfg, P).payload == PAYLOAD
    assert result.estimate.snr_est_db == pytest.approx(20.0, abs=1.5)


def test_frames_iterates_over_a_multi_frame_capture():
    cfg = FrameConfig(payload=PAYLOAD)
    frame = build_frame(cfg, P).samples
    gap = np.zeros(3 * N + 17, dtype=np.complex128)
    stream = np.concatenate([gap, frame, gap, frame, gap])
    results = list(FrameSynchronizer(P, cfg).frames(stream))
    assert len(results) == 2
    assert results[0].frame_start == gap.size
    assert results[1].frame_start == 2 * gap.size + frame.size
    for result in results:
        assert decode_payload_symbols(result.symbols, cfg, P).payload == PAYLOAD


def test_noise_only_stream_fails_detection():
    noise = complex_awgn(30 * N, 1.0, np.random.default_rng(2))
    strict = SyncConfig(detection_matches=7)
    with pytest.raises(SyncFailure) as excinfo:
        FrameSynchronizer(P, FrameConfig(payload=PAYLOAD), strict).synchronize(noise)
    assert excinfo.value.stage == "detect"
    with pytest.raises(SyncFailure):
        FrameSynchronizer(P, FrameConfig(payload=PAYLOAD)).synchronize(noise)


def test_synchronize_survives_corrupted_preamble_windows():
    cfg, _, rx = _received(20.0, 0.0)
    damaged = _corrupt_windows(rx.samples, [1, 2])
    result = FrameSynchronizer(P, cfg).synchronize(damaged)
    assert decode_payload_symbols(result.symbols, cfg, P).payload == PAYLOAD


def test_deepest_failure_is_reported():
    synchronizer = FrameSynchronizer(P, FrameConfig())
    assert synchronizer.deepest_failure() is None
    synchronizer.failures = [SyncFailure("downchirp", "a"), SyncFailure("netid", "b"), SyncFailure("integer", "c")]
    assert synchronizer.deepest_failure().stage == "netid"


def test_netid_validation_rejects_other_networks():
    _, _, rx = _received(10.0, 2.0)
    other = FrameConfig(payload=PAYLOAD, sync_word=0x34)
    with pytest.raises(SyncFailure) as excinfo:
        FrameSynchronizer(P, other, SyncConfig(validate_netid=True)).synchronize(rx)
    assert excinfo.value.stage == "netid"
    own = FrameConfig(payload=PAYLOAD)
    result = FrameSynchronizer(P, own, SyncConfig(validate_netid=True)).synchronize(rx)
    assert result.stages["netid"]


def test_paired_network_ids_synchronize():
    cfg, _, rx = _received(33.5, 4.4, netid_mode="paired", sync_word=0x21)
    result = FrameSynchronizer(P, cfg, SyncConfig(validate_netid=True)).synchronize(rx)
    assert decode_payload_symbols(result.symbols, cfg, P).payload == PAYLOAD


def test_truncated_stream_fails():
    cfg, _, rx = _received(10.0, 0.0)
    with pytest.raises(SyncFailure):
        FrameSynchronizer(P, cfg).synchronize(rx.samples[: 14 * N])


def test_detection_threshold_validation():
    with pytest.raises(ConfigurationError):
        FrameSynchronizer(P, FrameConfig(), SyncConfig(detection_matches=9))
    with pytest.raises(ConfigurationError):
        SyncConfig(sto_refinements=-1)


def test_genie_synchronize_uses_true_offsets():
    cfg, spec, rx = _received(37.3, 5.25)
    result = genie_synchronize(rx, spec, P, cfg)
    assert result.estimate.tau_sto == pytest.approx(37.3)
    assert result.estimate.tau_cfo == pytest.approx(5.25)
    assert np.array_equal(result.symbols, encode_payload_symbols(PAYLOAD, cfg, P))
    assert all(result.stages.values())


@pytest.mark.slow
def test_synchronizer_accuracy_over_random_offsets():
    rng = np.random.default_rng(2024)
    within = 0
    trials = 1000
    for trial in range(trials):
        tau_sto = float(rng.uniform(0, 2 * N))
        tau_cfo = float(rng.uniform(-N / 8, N / 8))
        cfg, _, rx = _received(tau_sto, tau_cfo, snr_db=20.0, seed=trial)
        try:
            result = FrameSynchronizer(P, cfg).synchronize(rx)
        except SyncFailure:
            continue
        if abs(result.estimate.tau_sto - tau_sto) <= 0.02 and abs(result.estimate.tau_cfo - tau_cfo) <= 0.02:
            within += 1
    assert within >= 0.99 * trials
