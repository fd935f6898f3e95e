import numpy as np
import pytest

from handpass.codec import CsiFrame

# one line per acceptance criterion, echoed after the test summary so the
# verdicts are visible without -s (see test_acceptance.report)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_frame(rng: np.random.Generator, ts: tuple = (0, 0)) -> CsiFrame:
    """One CSI frame with random metadata and random int16 subcarriers."""
    return CsiFrame(
        rssi=int(rng.integers(-128, 128)),
        frame_control=int(rng.integers(0, 256)),
        source_mac=bytes(rng.integers(0, 256, size=6, dtype=np.uint8).tolist()),
        sequence_number=int(rng.integers(0, 65536)),
        core_spatial=int(rng.integers(0, 65536)),
        chanspec=int(rng.integers(0, 65536)),
        chip_version=int(rng.integers(0, 65536)),
        csi=rng.integers(-32768, 32768, size=(256, 2), dtype=np.int16),
        ts_sec=ts[0],
        ts_usec=ts[1],
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Shared tiny synthetic corpus: 4 users x 2 captures x 60 frames @ 20/s."""
    from handpass import synth

    out = tmp_path_factory.mktemp("corpus")
    cfg = synth.SynthConfig(
        users=4,
        captures_per_user=2,
        frames_per_capture=60,
        packets_per_second=20,
        noise_sigma=0.4,
        seed=1234,
    )
    manifest = synth.generate(cfg, out)
    return out, cfg, manifest
