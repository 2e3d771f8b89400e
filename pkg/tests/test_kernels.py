"""Backend selection and bitwise agreement of the gather kernels."""

import os
import subprocess
import sys

import numpy as np
import pytest

from naide._kernels import BACKEND, _gather_py
from naide.context import pad_for_context

try:
    from naide._kernels import _gather as _gather_c
except ImportError:
    _gather_c = None

needs_compiled = pytest.mark.skipif(_gather_c is None, reason="compiled kernel not built")


def _random_case(seed, height=32, width=48, k=7, batch=512):
    rng = np.random.default_rng(seed)
    pixels = rng.uniform(-0.3, 1.3, size=(height, width))  # noisy range, not just [0,1]
    padded = pad_for_context(pixels, k)
    rows = rng.integers(0, height, size=batch).astype(np.intp)
    cols = rng.integers(0, width, size=batch).astype(np.intp)
    return padded, rows, cols, k


class TestBackends:
    def test_backend_reported(self):
        assert BACKEND in ("compiled", "numpy")

    @needs_compiled
    def test_bitwise_agreement(self):
        for seed in range(5):
            padded, rows, cols, k = _random_case(seed)
            out_py = np.empty((rows.size, k * k - 1))
            out_c = np.empty_like(out_py)
            _gather_py.gather_contexts(padded, rows, cols, k, out_py)
            _gather_c.gather_contexts(padded, rows, cols, k, out_c)
            np.testing.assert_array_equal(out_py, out_c)

    @needs_compiled
    def test_bitwise_agreement_large_k(self):
        padded, rows, cols, k = _random_case(9, height=64, width=64, k=17, batch=256)
        out_py = np.empty((rows.size, k * k - 1))
        out_c = np.empty_like(out_py)
        _gather_py.gather_contexts(padded, rows, cols, k, out_py)
        _gather_c.gather_contexts(padded, rows, cols, k, out_c)
        np.testing.assert_array_equal(out_py, out_c)

    def test_env_forces_numpy_backend(self):
        env = dict(os.environ, NAIDE_KERNELS="numpy")
        code = "from naide._kernels import BACKEND; print(BACKEND)"
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "numpy"

    def test_env_rejects_unknown_backend(self):
        env = dict(os.environ, NAIDE_KERNELS="cuda")
        code = "import naide._kernels"
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
        assert out.returncode != 0

    @needs_compiled
    def test_env_forces_compiled_backend(self):
        env = dict(os.environ, NAIDE_KERNELS="compiled")
        code = "from naide._kernels import BACKEND; print(BACKEND)"
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "compiled"
