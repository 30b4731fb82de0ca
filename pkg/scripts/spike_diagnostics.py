# k-hat selection, eta-hat verdicts and NR vs sample eigenvalue error
# on the planted two-spike design and on the identity.
import argparse

import numpy as np

from hdtest.datagen import CovSpec, DistSpec, Sampler, seeded_stream
from hdtest.estimators import nr_eigenvalues
from hdtest.modelcheck import eta_hat, kappa, select_k

ap = argparse.ArgumentParser()
ap.add_argument("--p", type=int, default=1024)
ap.add_argument("--n", type=int, default=96)
ap.add_argument("--reps", type=int, default=200)
ap.add_argument("--seed", type=int, default=0)
args = ap.parse_args()

lam1 = args.p ** (2 / 3)
for label, cov in (("spiked", CovSpec("spiked_block")), ("identity", CovSpec())):
    sampler = Sampler(DistSpec("gaussian", cov), args.p)
    ks, etas, nr, raw = [], [], [], []
    for r in range(args.reps):
        s = sampler.draw(args.n, seeded_stream(args.seed, r))
        ks.append(select_k(s))
        etas.append(eta_hat(s)[0])
        if label == "spiked":
            nr.append(abs(nr_eigenvalues(s.summary)[0] / lam1 - 1))
            raw.append(abs(s.summary.eigen.values[0] / lam1 - 1))
    counts = np.bincount(ks)
    print(f"{label}: k-hat counts {dict(enumerate(counts.tolist()))}, "
          f"P(eta >= kappa) {np.mean(np.array(etas) >= kappa(args.n)):.3f}")
    if nr:
        print(f"  median rel. error  NR {np.median(nr):.4f}  sample {np.median(raw):.4f}")
