import numpy as np


def random_cluster(n, rng, min_dist=0.8, box=None):
    """Uniform random points in a cube with every pair at least ``min_dist`` apart."""
    box = box or 1.2 * n ** (1 / 3) + 0.5
    x = np.empty((n, 3))
    for i in range(n):
        while True:
            p = rng.uniform(-box / 2, box / 2, size=3)
            if i == 0 or np.min(np.linalg.norm(x[:i] - p, axis=1)) >= min_dist:
                x[i] = p
                break
    return x


def relative_error(g, ref):
    """Largest component deviation, scaled by the largest reference component."""
    scale = max(np.abs(ref).max(), 1e-12)
    return float(np.abs(np.asarray(g) - ref).max() / scale)


class QuadraticModel:
    """E = x.A.x / 2 - b.x on a flat vector."""

    def __init__(self, a, b=None):
        self.a = np.asarray(a, dtype=float)
        self.b = np.zeros(len(self.a)) if b is None else np.asarray(b, dtype=float)

    def energy(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.a @ x - self.b @ x)

    def gradient(self, x):
        return self.a @ np.asarray(x, dtype=float) - self.b

    def energy_and_gradient(self, x):
        return self.energy(x), self.gradient(x)


def spd_matrix(d, rng, cond=10.0):
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    eig = np.linspace(1.0, cond, d)
    return q @ np.diag(eig) @ q.T


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def truncated_octahedron_38():
    """The fcc 38-atom truncated octahedron at nearest-neighbour distance 2^(1/6).

    The 38 fcc sites nearest an octahedral hole: shells of 6, 8 and 24.
    """
    r = np.arange(-3, 5)
    pts = np.array([(i, j, k) for i in r for j in r for k in r if (i + j + k) % 2 == 0], dtype=float)
    pts -= np.array([1.0, 0.0, 0.0])
    d = np.einsum("ij,ij->i", pts, pts)
    pts = pts[np.argsort(d, kind="stable")[:38]]
    return pts * (2 ** (1 / 6) / np.sqrt(2.0))


def random_topology(rng, n=6, families=None):
    """Chain topology over ``n`` atoms with every term family populated."""
    from hybridmin.forcefield import ForceFieldTopology

    bonds = [(i, i + 1, rng.uniform(100, 400), rng.uniform(0.9, 1.6)) for i in range(n - 1)]
    angles = [(i, i + 1, i + 2, rng.uniform(20, 80), rng.uniform(1.6, 2.2)) for i in range(n - 2)]
    dihedrals = [(i, i + 1, i + 2, i + 3, rng.uniform(0.5, 3), int(rng.integers(1, 4)),
                  rng.uniform(0, np.pi)) for i in range(n - 3)]
    ub = [(i, i + 2, rng.uniform(5, 30), rng.uniform(2.0, 2.6)) for i in range(n - 2)]
    impropers = [(i, i + 1, i + 2, i + 3, rng.uniform(5, 50), rng.uniform(-0.5, 0.5)) for i in range(n - 3)]
    return ForceFieldTopology(
        n_atoms=n, bonds=bonds, angles=angles, dihedrals=dihedrals, urey_bradley=ub,
        impropers=impropers, charges=rng.uniform(-0.8, 0.8, n),
        rmin_half=rng.uniform(0.6, 1.0, n), epsilon=rng.uniform(0.05, 0.3, n),
        dielectric=rng.uniform(1.0, 4.0), auto_exclude=False,
    )


def random_chain(n, rng, bond=1.4, min_dist=1.0):
    """Self-avoiding random walk with bond-angle away from 0 and pi."""
    while True:
        x = [np.zeros(3)]
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        ok = True
        for _ in range(n - 1):
            for _ in range(100):
                nd = rng.normal(size=3)
                nd /= np.linalg.norm(nd)
                if -0.9 < nd @ d < 0.6:
                    break
            p = x[-1] + bond * nd
            if len(x) > 1 and np.min(np.linalg.norm(np.array(x) - p, axis=1)) < min_dist:
                ok = False
                break
            x.append(p)
            d = nd
        if ok:
            return np.array(x)
