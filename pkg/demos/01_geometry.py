"""Chart geometry on the catalog surfaces.

Every computation in the package happens on the parameter disk U, with the
surface entering only through the chart. This script prints frame data
and the mean curvature at a few points and validates each chart's
area element before any mesh is built.
"""
import numpy as np

from surfpoisson import DomainSpec, make_chart, mean_curvature, metric_frame, validate_chart

disk = DomainSpec.disk()
points = np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 0.9]])

for kind, params in [("flat", {}), ("cylinder", {"radius": 1.0}), ("hemisphere", {"R": 2.0}),
                     ("monge", {"coefficients": {(2, 0): 0.3, (1, 1): 0.2}})]:
    chart = make_chart(kind, params, disk)
    frame = metric_frame(chart, points)
    H = mean_curvature(chart, points)
    print(f"\n{kind}")
    for X, sg, n, h in zip(points, frame.sqrtG, frame.n, H):
        print(f"  X={X}  sqrtG={sg:.6f}  n={np.round(n, 6)}  H={h:+.6f}")
    rep = validate_chart(chart)
    print(f"  lambda_min={rep.lambda_min_est:.6f} lambda_max={rep.lambda_max_est:.6f} "
          f"lambda_0={rep.lambda_0_est:.6f} passed={rep.passed}")

# The cylinder is an isometry of the plane: same metric, curved normal.
# The sphere of radius 2 has H = -1 everywhere with this sign convention.
# A pinched chart loses its area element at an interior point and is refused.
rep = validate_chart(make_chart("pinched", domain=disk))
print(f"\npinched: passed={rep.passed} degenerate={rep.degenerate} first flag={rep.worst_points[0]}")
