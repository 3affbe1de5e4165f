"""How far a reading reaches as the UAV climbs.

The kernel lengthscale grows with altitude, so one reading at 40 m informs a
much wider patch of ground than one at 5 m, but each ground cell learns less
from it.  Prints the half-correlation radius and the posterior variance left
at the cell under the sensor.
"""

import numpy as np

from sarplan.gp import GibbsKernelParams, ObservationSet, half_correlation_radius, posterior
from sarplan.lost_person import BeliefGrid

kp = GibbsKernelParams()
prior = BeliefGrid((0.0, 0.0), 10.0, np.full((21, 21), 1 / 441))
center = np.array([105.0, 105.0])

print(f"{'altitude':>8} {'radius':>8} {'var below':>10} {'cells < 0.99':>12}")
for alt in (0.0, 5.0, 10.0, 20.0, 40.0, 60.0):
    post = posterior(ObservationSet(np.array([[*center, alt]])), prior, kp)
    below = post.var[np.argmin(np.linalg.norm(post.cells - center, axis=1))]
    print(f"{alt:>8.0f} {half_correlation_radius(alt, kp):>8.2f} {below:>10.3f} {np.sum(post.var < 0.99):>12d}")
