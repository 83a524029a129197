"""Validate objective scores against a (simulated) subjective study.

Scores a grid of reference x distortion pairs with the demo bank, then
simulates mean-opinion scores for the same pairs: each distortion level
has a latent quality in [1, 5] plus observer noise. The evaluation
protocol regresses objective scores onto the subjective ones with a
5-parameter logistic + linear curve and reports correlation (PCC/SROCC),
RMSE, the 2-sigma outlier ratio, and five histogram distances between the
regressed and subjective score distributions. Writes the regression
scatter to demo_output/scatter.csv for plotting.
"""

import numpy as np

from msunique.colorspace import to_ygcr
from msunique.decoder import TrainingConfig
from msunique.evaluation import evaluate, export_scatter, format_report
from msunique.filterbank import load_bank, train_bank
from msunique.imageio import SubjectiveEntry
from msunique.patches import PatchMatrix, extract_random_patches
from msunique.scoring import quality_score

from _common import add_noise, blur, make_image, output_dir

rng = np.random.default_rng(4)
bank_path = output_dir() / "demo_bank.msub"
if bank_path.exists():
    bank = load_bank(bank_path)
    print(f"loaded {bank_path}")
else:
    corpus = [make_image(rng, 96, 96) for _ in range(6)]
    mats = [extract_random_patches(to_ygcr(img), 500, 8, rng) for img in corpus]
    patches = PatchMatrix(8, np.concatenate([m.data for m in mats], axis=1))
    bank = train_bank(patches, sizes=(16, 25), cfg=TrainingConfig(epochs=60, seed=7))
    print("trained a fresh bank (run 02_train_filter_bank.py to cache one)")

# latent quality per distortion level, shared across references
ladder = [
    ("blur0.5", lambda im: blur(im, 0.5), 4.6),
    ("blur1", lambda im: blur(im, 1.0), 3.9),
    ("blur2", lambda im: blur(im, 2.0), 2.7),
    ("blur4", lambda im: blur(im, 4.0), 1.4),
    ("noise0.01", lambda im: add_noise(im, 0.01, np.random.default_rng(41)), 4.4),
    ("noise0.03", lambda im: add_noise(im, 0.03, np.random.default_rng(42)), 3.5),
    ("noise0.08", lambda im: add_noise(im, 0.08, np.random.default_rng(43)), 2.0),
]

pairs = []
entries = []
for i in range(3):
    ref = make_image(np.random.default_rng(200 + i), 120, 120)
    for name, distort, latent in ladder:
        pairs.append(quality_score(bank, ref, distort(ref), f"ref{i}", name))
        mos = float(np.clip(latent + 0.15 * rng.standard_normal(), 1.0, 5.0))
        entries.append(SubjectiveEntry(f"ref{i}_{name}.ppm", f"ref{i}.ppm", mos, 0.25))

print(f"scored {len(pairs)} (reference, distortion) pairs\n")
report = evaluate(pairs, entries, bins=10)
print(format_report(report))

scatter = output_dir() / "scatter.csv"
export_scatter(
    [p.score for p in pairs], report.regression.regressed,
    [e.score for e in entries], scatter,
)
print(f"\nwrote {scatter} (objective, regressed, subjective columns)")
print("high PCC/SROCC and a small outlier ratio mean the objective score")
print("tracks the simulated opinions; the histogram distances compare the")
print("regressed and subjective score distributions shape-to-shape.")
