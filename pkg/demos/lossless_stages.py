"""
The lossless stages one at a time
=================================

Follow a run of slowly varying bin indices through delta coding, negabinary,
bit-plane transposition and zero elimination, and watch the size drop.
"""

import numpy as np

from lopc.lossless import PIPELINES, compress_stream, decompress_stream

rng = np.random.default_rng(0)
bins = np.cumsum(rng.integers(-2, 3, 4096)).astype(np.int32)
data = bins.view(np.uint8)
print("input bytes", data.size)

# apply the bin pipeline stage by stage
stream = data.copy()
for stage in PIPELINES["bins32"]:
    stream = stage.encode(stream)
    nonzero = np.count_nonzero(stream)
    print(f"after {stage!r:<14} {stream.size:>6} bytes, {nonzero:>6} nonzero")

# the chunked container wraps the same stages and falls back to raw storage
blob = compress_stream(data, "bins32")
assert decompress_stream(blob, "bins32") == data.tobytes()
print("chunked stream", len(blob), "bytes")

# random bytes do not shrink, so every chunk is stored raw
noise = rng.integers(0, 256, 50000, dtype=np.uint8)
print("noise", noise.size, "->", len(compress_stream(noise, "bins32")))
