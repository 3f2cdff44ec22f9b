"""
Compress a field and check what survived
========================================

Round trip a smooth 3D field through the codec, then confirm the
reconstruction keeps the error bound, the local order and every critical point.
"""

import numpy as np

import lopc
from lopc import synthetic

# a 64^3 float32 field laid out as (Z, Y, X)
field = synthetic.smooth((64, 64, 64), seed=3)
print("field", field.shape, field.dtype, "range", float(field.max() - field.min()))

# bound relative to the value range; the absolute bound lands in the header
archive = lopc.compress(field, lopc.ErrorBound("noa", 1e-2))
blob = archive.to_bytes()
print("archive bytes", len(blob), "ratio", round(lopc.compression_ratio(field, archive), 2))

restored = lopc.decompress(blob)
eps = archive.header.eps_abs
print("max error", float(np.abs(restored - field).max()), "bound", eps)

# the verifier reports bound, order and critical point agreement in one go
report = lopc.verify_fields(field, restored, eps)
for key in ("bound_ok", "local_order_violations", "false_positives", "false_negatives", "false_types", "psnr"):
    print(f"{key:>24}: {report[key]}")
