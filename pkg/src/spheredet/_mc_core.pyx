# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernel for the Monte-Carlo intersection-volume estimate.

Draws uniforms straight from a numpy BitGenerator through the capsule API,
three consecutive doubles per sample (x, y, z), which is exactly the order
``Generator.random((n, 3))`` consumes them in — so the pure-numpy fallback
in ``spheredet._mc_python`` produces bit-identical hit counts.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from numpy.random cimport bitgen_t


def count_hits(bit_generator, Py_ssize_t samples, double r_a, double r_b,
               double d, double x_lo, double x_hi, double rho):
    """Counts samples landing inside both spheres.

    Points are drawn uniformly from the box [x_lo, x_hi] x [-rho, rho]^2 in
    the frame with sphere a at the origin and sphere b at (d, 0, 0).
    """
    cdef bitgen_t *rng
    cdef const char *capsule_name = "BitGenerator"
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("invalid BitGenerator capsule")
    rng = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)

    cdef double ra2 = r_a * r_a
    cdef double rb2 = r_b * r_b
    cdef double span = x_hi - x_lo
    cdef double two_rho = 2.0 * rho
    cdef double x, y, z, t
    cdef Py_ssize_t i, hits = 0

    with bit_generator.lock, nogil:
        for i in range(samples):
            x = x_lo + rng.next_double(rng.state) * span
            y = rng.next_double(rng.state) * two_rho - rho
            z = rng.next_double(rng.state) * two_rho - rho
            t = y * y + z * z
            if x * x + t <= ra2 and (x - d) * (x - d) + t <= rb2:
                hits += 1
    return hits
