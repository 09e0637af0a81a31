"""Tests for backend dispatch and pure/compiled bit parity."""

import os
import subprocess
import sys

import numpy as np
import pytest

from bplab import kernels
from bplab.experiments import derive_seed, random_connected_graph
from bplab.graph import LOOPY_SUITE, generate_structure

needs_compiled = pytest.mark.skipif(not kernels.has_compiled(),
                                    reason="compiled kernels not built")


def workload(count=40, seed=123):
    cases = []
    for t in range(count):
        rng = np.random.default_rng(derive_seed(seed, t))
        if t % 2 == 0:
            graph = generate_structure(LOOPY_SUITE[t % len(LOOPY_SUITE)], rng)
        else:
            graph = random_connected_graph(int(rng.integers(2, 10)), rng)
        cases.append(graph)
    return cases


class TestParity:
    @needs_compiled
    def test_sumproduct_backends_are_bit_identical(self):
        for graph in workload():
            ea, eb, tb = graph.kernel_arrays
            for damping in (0.0, 0.3):
                pure = kernels.sumproduct_pure(graph.num_vars, ea, eb, tb,
                                               1000, 1e-10, damping)
                comp = kernels.sumproduct_compiled(graph.num_vars, ea, eb, tb,
                                                   1000, 1e-10, damping)
                assert np.array_equal(pure[0], comp[0])   # marginals
                assert pure[1] == comp[1]                 # iterations
                assert pure[2] == comp[2]                 # converged
                assert np.array_equal(pure[3], comp[3])   # var -> factor
                assert np.array_equal(pure[4], comp[4])   # factor -> var

    @needs_compiled
    def test_enumeration_backends_are_bit_identical(self):
        for graph in workload(count=12):
            ea, eb, tb = graph.kernel_arrays
            pure_acc, pure_z = kernels.enumerate_joint_pure(graph.num_vars, ea, eb, tb)
            comp_acc, comp_z = kernels.enumerate_joint_compiled(graph.num_vars, ea, eb, tb)
            assert pure_z == comp_z
            assert np.array_equal(pure_acc, comp_acc)


class TestDispatch:
    def test_backend_name_is_reported(self):
        assert kernels.backend_name() in ("compiled", "pure")

    def test_dispatch_matches_the_explicit_backend(self):
        graph = workload(count=1)[0]
        ea, eb, tb = graph.kernel_arrays
        via_dispatch = kernels.sumproduct(graph.num_vars, ea, eb, tb, 100, 1e-10, 0.0)
        explicit = (kernels.sumproduct_compiled if kernels.backend_name() == "compiled"
                    else kernels.sumproduct_pure)(graph.num_vars, ea, eb, tb,
                                                  100, 1e-10, 0.0)
        assert np.array_equal(via_dispatch[0], explicit[0])

    def test_env_var_forces_the_pure_backend(self):
        code = ("import bplab.kernels as k; "
                "print(k.backend_name())")
        env = dict(os.environ, BPLAB_PURE="1")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "pure"

    def test_mismatched_arrays_are_rejected(self):
        with pytest.raises(ValueError):
            kernels.sumproduct(2, np.array([0], dtype=np.int32),
                               np.array([1, 0], dtype=np.int32),
                               np.ones(4), 10, 1e-10, 0.0)

    def test_factorless_graph_is_uniform_and_converged(self):
        marginals, iterations, converged, vf, fv = kernels.sumproduct(
            3, np.empty(0, dtype=np.int32), np.empty(0, dtype=np.int32),
            np.empty(0), 10, 1e-10, 0.0)
        assert np.all(marginals == 0.5)
        assert converged
        assert vf.shape == (0, 2, 2)
