"""Why the left-right ambiguity exists, and why a maneuver breaks it.

A straight towed array cannot tell a contact at bearing theta from its
mirror at 2h - theta about the array axis. While the ownship sails
straight, the mirror of the target's track is itself a perfectly valid
constant-velocity track, so no amount of filtering can separate the two.
This script draws the true target, its ghost, and the bearing streams;
after the course change at minute 13 the ghost track kinks (the mirror
axis rotates with the array) and stops being explainable by the motion
model.

Run:  python demos/ambiguity_geometry.py
"""

import numpy as np

import towedtma as tt
from towedtma import sensing, simkit

cfg = tt.ScenarioConfig(model_kind="cv")
observers = simkit.gen_observer_track(cfg)
target = simkit.gen_target_track(cfg)
rel = simkit.relative_truth(target, observers)

ghost_abs = []
bearings, ghosts = [], []
for k in range(1, cfg.horizon + 1):
    theta = sensing.true_bearing(rel[k])
    h = observers[k].heading
    bearings.append(np.degrees(theta))
    ghosts.append(np.degrees(sensing.ghost_bearing(theta, h)))
    mirror_rel = sensing.reflect_state(rel[k], h)
    ghost_abs.append(mirror_rel[:2] + [observers[k].x, observers[k].y])
ghost_abs = np.array(ghost_abs)

print("t   true bearing   ghost bearing   (deg, clockwise from north)")
for k, (b, g) in enumerate(zip(bearings, ghosts), start=1):
    marker = "  <- maneuvering" if 13 <= k <= 17 else ""
    print(f"{k:2d} {b:13.2f} {g:15.2f}{marker}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    obs = np.array([[o.x, o.y] for o in observers])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax1.plot(obs[:, 0], obs[:, 1], "b-", label="ownship")
    ax1.plot(target[:, 0], target[:, 1], "k-", label="target")
    ax1.plot(ghost_abs[:, 0], ghost_abs[:, 1], "r:", label="ghost (mirror)")
    ax1.set_xlabel("east (km)")
    ax1.set_ylabel("north (km)")
    ax1.axis("equal")
    ax1.legend()
    ax1.set_title("the ghost kinks when the array turns")

    t = np.arange(1, cfg.horizon + 1)
    ax2.plot(t, bearings, "k-", label="true bearing")
    ax2.plot(t, ghosts, "r:", label="ghost bearing")
    ax2.axvspan(13, 17, color="0.9", label="maneuver")
    ax2.set_xlabel("time (min)")
    ax2.set_ylabel("bearing (deg)")
    ax2.legend()
    ax2.set_title("mirrored bearing streams")
    fig.tight_layout()
    fig.savefig("ambiguity_geometry.png", dpi=120)
    print("wrote ambiguity_geometry.png")
except ImportError:
    pass
