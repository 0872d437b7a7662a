#!/usr/bin/env python3
"""Build the SMILES corpora shipped under data/.

Sources (both installable from PyPI, pass the wheel paths on the command line):
  * molsets  (MOSES benchmark, MIT)  -> moses/dataset/data/train.csv.gz
  * datamol  (Apache-2.0)            -> datamol/data/chembl_samples.csv

Outputs:
  data/zinc_like.smi     10,000 drug-like molecules sampled from the MOSES
                         training split (itself a filtered ZINC subset).
  data/qm9_like.smi      10,000 distinct small molecules (3..9 heavy atoms,
                         C/N/O/F only) cut as connected fragments out of MOSES
                         molecules; a stand-in for QM9.
  data/chembl_sample.smi the 2,000 ChEMBL molecules bundled with datamol,
                         untouched (charges, salts and stereo included).

Every line is "<smiles>\t<id>". Needs rdkit for the fragment step.
"""

import argparse
import gzip
import io
import random
import zipfile
from pathlib import Path

from rdkit import Chem, RDLogger

RDLogger.DisableLog("rdApp.*")

QM9_ELEMENTS = {"C", "N", "O", "F"}


def read_moses(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = gzip.decompress(z.read("moses/dataset/data/train.csv.gz"))
    lines = raw.decode().splitlines()
    assert lines[0] == "SMILES"
    return lines[1:]


def read_chembl(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("datamol/data/chembl_samples.csv").decode()
    lines = raw.splitlines()
    assert lines[0] == "smiles"
    return lines[1:]


def random_fragment(mol, rng, size):
    allowed = [a.GetIdx() for a in mol.GetAtoms() if a.GetSymbol() in QM9_ELEMENTS]
    if not allowed:
        return None
    start = rng.choice(allowed)
    chosen = {start}
    frontier = [start]
    while frontier and len(chosen) < size:
        atom = mol.GetAtomWithIdx(rng.choice(frontier))
        nbrs = [
            n.GetIdx()
            for n in atom.GetNeighbors()
            if n.GetSymbol() in QM9_ELEMENTS and n.GetIdx() not in chosen
        ]
        if not nbrs:
            frontier.remove(atom.GetIdx())
            continue
        pick = rng.choice(nbrs)
        chosen.add(pick)
        frontier.append(pick)
    if len(chosen) < 3:
        return None
    rw = Chem.RWMol(mol)
    for idx in sorted((a.GetIdx() for a in mol.GetAtoms() if a.GetIdx() not in chosen), reverse=True):
        rw.RemoveAtom(idx)
    frag = rw.GetMol()
    for a in frag.GetAtoms():
        a.SetNoImplicit(False)
        a.SetNumExplicitHs(0)
    try:
        Chem.SanitizeMol(frag)
    except Exception:
        return None
    return Chem.MolToSmiles(frag)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--molsets", required=True)
    ap.add_argument("--datamol", required=True)
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20241019)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    moses = read_moses(args.molsets)
    rows = rng.sample(range(len(moses)), 10_000)
    with open(out / "zinc_like.smi", "w") as f:
        for r in rows:
            f.write(f"{moses[r]}\tmoses_train_{r}\n")

    seen = set()
    qm9 = []
    order = list(range(len(moses)))
    rng.shuffle(order)
    for r in order:
        if len(qm9) >= 10_000:
            break
        mol = Chem.MolFromSmiles(moses[r])
        if mol is None:
            continue
        Chem.Kekulize(mol, clearAromaticFlags=True)
        smi = random_fragment(mol, rng, rng.randint(3, 9))
        if smi is None or smi in seen or "." in smi:
            continue
        seen.add(smi)
        qm9.append((smi, r))
    with open(out / "qm9_like.smi", "w") as f:
        for i, (smi, r) in enumerate(qm9):
            f.write(f"{smi}\tfrag_{i}_of_{r}\n")

    chembl = read_chembl(args.datamol)
    with open(out / "chembl_sample.smi", "w") as f:
        for i, smi in enumerate(chembl):
            f.write(f"{smi}\tchembl_sample_{i}\n")


if __name__ == "__main__":
    main()
