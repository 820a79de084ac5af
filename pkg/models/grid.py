"""
Discretized (theta, omega_s, omega_p) integration domain of the biphoton state.
"""
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True, eq=False)
class BiphotonGrid:
    """Midpoint tensor grid over the admissible wedge times the pump spectrum.

    The angular part is stored per (theta, omega_s) node, the pump part per
    omega_p node; the joint density is their product. ``*_weights`` are
    quadrature measures and ``*_density`` the normalized densities, so that
    sum(weights * density) = 1 for each factor.
    """

    theta: np.ndarray            # (n_theta,) signal angles, rad
    omega_s: np.ndarray          # (n_theta, n_omega_s) signal detuning, rad/s
    theta_idler: np.ndarray      # (n_theta, n_omega_s) idler angle -theta + gamma*omega_s, rad
    angular_weights: np.ndarray  # (n_theta, n_omega_s)
    angular_density: np.ndarray  # (n_theta, n_omega_s)
    omega_p: np.ndarray          # (n_omega_p,) pump detuning, rad/s
    pump_weights: np.ndarray     # (n_omega_p,)
    pump_density: np.ndarray     # (n_omega_p,)
    acceptance: float
    gamma: float

    def __post_init__(self):
        for name in ('theta', 'omega_s', 'theta_idler', 'angular_weights', 'angular_density',
                     'omega_p', 'pump_weights', 'pump_density'):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def shape(self):
        return self.omega_s.shape + self.omega_p.shape

    @property
    def theta_nodes(self):
        """Signal angle of every angular node, broadcast to (n_theta, n_omega_s)."""
        return np.broadcast_to(self.theta[:, None], self.omega_s.shape)

    @property
    def angular_probability(self):
        """Probability mass of each angular node (weights times density)."""
        return self.angular_weights * self.angular_density

    @property
    def pump_probability(self):
        return self.pump_weights * self.pump_density

    def normalization(self):
        """Total probability of the joint density; 1 up to rounding."""
        return float(np.sum(self.angular_probability) * np.sum(self.pump_probability))

    def joint_density(self):
        """Full (n_theta, n_omega_s, n_omega_p) density |f|^2 |A|^2."""
        return self.angular_density[:, :, None] * self.pump_density[None, None, :]

    def __repr__(self):
        return f'<BiphotonGrid shape={self.shape} acceptance={self.acceptance:.3g}>'

    def to_dict(self):
        """Summary of the grid (the node arrays go to CSV)."""
        return {
            'shape': list(self.shape),
            'acceptance': self.acceptance,
            'theta_span': [float(self.theta.min()), float(self.theta.max())],
            'omega_p_span': [float(self.omega_p.min()), float(self.omega_p.max())],
            'normalization': self.normalization(),
        }

    def export_csv(self, path):
        """Write the angular nodes for debugging; one row per (theta, omega_s) node."""
        theta = self.theta_nodes
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            writer = csv.writer(handle)
            writer.writerow(['theta', 'omega_s', 'theta_idler', 'weight', 'density'])
            for index in np.ndindex(self.omega_s.shape):
                writer.writerow([
                    repr(float(theta[index])),
                    repr(float(self.omega_s[index])),
                    repr(float(self.theta_idler[index])),
                    repr(float(self.angular_weights[index])),
                    repr(float(self.angular_density[index])),
                ])
        return Path(path)
