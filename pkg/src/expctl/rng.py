"""Counter-based random streams.

Every random draw in the package is addressed by a *key*: the user seed
plus a tuple of integer words naming the purpose (drift schedule, theta
shots, ...) and position (epoch).  Keys map to independent Philox streams
through :class:`numpy.random.SeedSequence`, so a draw depends only on its
address and never on how many other draws happened first.
"""
import numpy as np

# Stream tags.  Values are part of the reproducibility contract.
DRIFT = 1
SHOTS_THETA = 2
SHOTS_ENERGY = 3
LEMMA = 4
VERIFY = 5

_MASK64 = (1 << 64) - 1
_SHOT_CHUNK = 1 << 20


def _bit_generator(seed, words):
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(w) for w in words))
    return np.random.Philox(ss)


def stream(seed, *words):
    """A fresh generator for the stream addressed by ``(seed, *words)``."""
    return np.random.Generator(_bit_generator(seed, words))


def shot_uniforms(seed, words, start, count):
    """Uniforms in [0, 1) for shots ``start .. start+count-1`` of a stream.

    Shot ``j`` always receives the ``j``-th double of the stream, whatever
    ``start`` and ``count`` are, so chunked or parallel evaluation agrees
    with one bulk call.
    """
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    bg = _bit_generator(seed, words)
    # Philox emits four 64-bit words per counter step; random() uses one each.
    block, lane = divmod(start, 4)
    if block:
        bg.advance(block)
    u = np.random.Generator(bg).random(count + lane)
    return u[lane:]


def iter_shot_uniforms(seed, words, count, chunk=_SHOT_CHUNK):
    """Yield the stream's first ``count`` uniforms in bounded-size chunks."""
    bg = _bit_generator(seed, words)
    gen = np.random.Generator(bg)
    done = 0
    while done < count:
        k = min(chunk, count - done)
        yield gen.random(k)
        done += k
