"""Plane regions used throughout: axis-aligned rectangles and discs.

Points are complex numbers; regions accept scalars or numpy arrays.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rect:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("empty rectangle")

    @property
    def center(self):
        return complex(0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    @property
    def width(self):
        return self.xmax - self.xmin

    @property
    def height(self):
        return self.ymax - self.ymin

    @property
    def area(self):
        return self.width * self.height

    def contains(self, z, slack=0.0):
        z = np.asarray(z)
        return (
            (z.real >= self.xmin - slack)
            & (z.real <= self.xmax + slack)
            & (z.imag >= self.ymin - slack)
            & (z.imag <= self.ymax + slack)
        )

    def contains_rect(self, other, slack=0.0):
        return (
            other.xmin >= self.xmin - slack
            and other.xmax <= self.xmax + slack
            and other.ymin >= self.ymin - slack
            and other.ymax <= self.ymax + slack
        )

    def padded(self, margin):
        return Rect(self.xmin - margin, self.xmax + margin,
                    self.ymin - margin, self.ymax + margin)

    def bounding_disc(self, slack=0.0):
        radius = 0.5 * np.hypot(self.width, self.height)
        return Disc(self.center, radius * (1.0 + slack))

    def grid(self, nx, ny=None):
        """Complex grid of nx*ny cell centers, row-major."""
        ny = nx if ny is None else ny
        xs = self.xmin + (np.arange(nx) + 0.5) * self.width / nx
        ys = self.ymin + (np.arange(ny) + 0.5) * self.height / ny
        gx, gy = np.meshgrid(xs, ys)
        return (gx + 1j * gy).ravel()

    def to_config(self):
        return {"xmin": self.xmin, "xmax": self.xmax,
                "ymin": self.ymin, "ymax": self.ymax}

    @staticmethod
    def from_config(d):
        return Rect(float(d["xmin"]), float(d["xmax"]),
                    float(d["ymin"]), float(d["ymax"]))


@dataclass(frozen=True)
class Disc:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disc radius must be positive")

    @property
    def area(self):
        return np.pi * self.radius**2

    def contains(self, z, slack=0.0):
        z = np.asarray(z)
        return np.abs(z - self.center) <= self.radius + slack

    def bounding_rect(self, slack=0.0):
        r = self.radius * (1.0 + slack)
        c = self.center
        return Rect(c.real - r, c.real + r, c.imag - r, c.imag + r)

    def bounding_disc(self, slack=0.0):
        return Disc(self.center, self.radius * (1.0 + slack))

    def to_config(self):
        return {"center": [self.center.real, self.center.imag],
                "radius": self.radius}

    @staticmethod
    def from_config(d):
        cx, cy = d["center"]
        return Disc(complex(float(cx), float(cy)), float(d["radius"]))


def as_region(obj):
    """Coerce a config dict to Rect or Disc."""
    if isinstance(obj, (Rect, Disc)):
        return obj
    if "radius" in obj:
        return Disc.from_config(obj)
    return Rect.from_config(obj)


def region_contains_disc(region, disc, slack=0.0):
    if isinstance(region, Disc):
        return (abs(disc.center - region.center) + disc.radius
                <= region.radius + slack)
    return region.contains_rect(disc.bounding_rect(), slack=slack)
