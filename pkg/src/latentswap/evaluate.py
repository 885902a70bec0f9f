"""Transfer evaluation: interpolations, oracle accuracy, FID report, grids.

Interpolation operates on latent parts by convex blending: the binary
part swap is the alpha=1 endpoint of part_i(alpha) = (1-alpha) a_i +
alpha b_i. Grids are returned row-major; cell (0, 0) is always the plain
reconstruction of the input image.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from . import autograd as ag
from .autograd import Tensor
from .data import denormalize
from .errors import ContractError
from .fid import features_of, fid, gaussian_stats, get_extractor
from .model import compose_t, decode_t, encode_t, to_hwc, to_nchw


def _encode_one(model, image):
    return encode_t(model, Tensor(to_nchw(np.asarray(image), model.dtype)))


def _decode_compose(model, image_t, parts_new, parts_ref, cuts):
    residual = decode_t(model, parts_new, parts_ref, cuts)
    return to_hwc(compose_t(image_t, residual).data)


def reconstruct(image, model):
    """A' = clamp(A + Dec([z_A, z_A]))."""
    with ag.no_grad():
        parts, cuts = _encode_one(model, image)
        img_t = Tensor(to_nchw(np.asarray(image), model.dtype))
        return _decode_compose(model, img_t, parts, parts, cuts)


def transfer(image_a, image_b, i, model, alpha=1.0):
    """(C, D): attribute i of each image replaced by the other's, blended by alpha."""
    with ag.no_grad():
        parts_a, cuts_a = _encode_one(model, image_a)
        parts_b, cuts_b = _encode_one(model, image_b)
        a_t = Tensor(to_nchw(np.asarray(image_a), model.dtype))
        b_t = Tensor(to_nchw(np.asarray(image_b), model.dtype))
        parts_c = list(parts_a)
        parts_d = list(parts_b)
        parts_c[i] = _blend(parts_a[i], parts_b[i], alpha)
        parts_d[i] = _blend(parts_b[i], parts_a[i], alpha)
        c = _decode_compose(model, a_t, parts_c, parts_a, cuts_a)
        d = _decode_compose(model, b_t, parts_d, parts_b, cuts_b)
    return c, d


def _blend(part_own, part_ref, alpha):
    if alpha == 1.0:
        return part_ref
    if alpha == 0.0:
        return part_own
    return ag.add(ag.mul(part_own, 1.0 - alpha), ag.mul(part_ref, alpha))


def transfer_multi(image_a, image_b, attr_alphas, model):
    """Blend several attributes in one encode/decode pass per image.

    `attr_alphas` is a sequence of (attribute_index, alpha) applied in
    order onto the running parts. Returns (c, d, residual_c, residual_d)
    as HWC arrays; alpha=1 entries reproduce the plain part swap.
    """
    with ag.no_grad():
        parts_a, cuts_a = _encode_one(model, image_a)
        parts_b, cuts_b = _encode_one(model, image_b)
        a_t = Tensor(to_nchw(np.asarray(image_a), model.dtype))
        b_t = Tensor(to_nchw(np.asarray(image_b), model.dtype))
        parts_c = list(parts_a)
        parts_d = list(parts_b)
        for i, alpha in attr_alphas:
            parts_c[i] = _blend(parts_c[i], parts_b[i], alpha)
            parts_d[i] = _blend(parts_d[i], parts_a[i], alpha)
        res_c = decode_t(model, parts_c, parts_a, cuts_a)
        res_d = decode_t(model, parts_d, parts_b, cuts_b)
        c = to_hwc(compose_t(a_t, res_c).data)
        d = to_hwc(compose_t(b_t, res_d).data)
    return c, d, to_hwc(res_c.data), to_hwc(res_d.data)


def transfer_chain(image_a, image_b, attrs, model):
    """Chained full transfer passes, re-encoding the outputs per attribute.

    The single-pass `transfer_multi` is the model's native multi-attribute
    semantics; this exists for comparing against naive chaining.
    """
    a, b = np.asarray(image_a), np.asarray(image_b)
    res_a = res_b = np.zeros_like(a)
    for i in attrs:
        c, d, res_a, res_b = transfer_multi(a, b, [(i, 1.0)], model)
        a, b = c, d
    return a, b, res_a, res_b


def interpolate_single(image, refs, i, steps, model):
    """Blend attribute i toward 1-3 reference exemplars.

    One reference yields a 1 x steps strip from t=0 (reconstruction) to
    t=1 (plain transfer). Three references yield a steps x steps grid,
    bilinearly blending the corner parts (input at (0,0), first reference
    along columns, second along rows, third at the far corner). Two
    references use the three-reference layout with the far corner set to
    their midpoint. Returns (images row-major, rows, cols).
    """
    if not 0 <= i < model.config.n_attributes:
        raise ContractError(f"attribute index {i} out of range")
    refs = list(refs)
    if not 1 <= len(refs) <= 3:
        raise ContractError(f"need 1-3 reference images, got {len(refs)}")
    if steps < 2:
        raise ContractError("steps must be >= 2")
    with ag.no_grad():
        parts_a, cuts_a = _encode_one(model, image)
        img_t = Tensor(to_nchw(np.asarray(image), model.dtype))
        ref_parts = [_encode_one(model, r)[0][i] for r in refs]
        own = parts_a[i]

        def decode_with(part_i):
            parts = list(parts_a)
            parts[i] = part_i
            return _decode_compose(model, img_t, parts, parts_a, cuts_a)

        if len(refs) == 1:
            out = [decode_with(_blend(own, ref_parts[0], t)) for t in np.linspace(0, 1, steps)]
            return out, 1, steps

        if len(refs) == 2:
            far = ag.mul(ag.add(ref_parts[0], ref_parts[1]), 0.5)
            corners = [own, ref_parts[0], ref_parts[1], far]
        else:
            corners = [own, ref_parts[0], ref_parts[1], ref_parts[2]]
        out = []
        for r in range(steps):
            u = r / (steps - 1)
            for c in range(steps):
                v = c / (steps - 1)
                part = _bilinear_corner_blend(corners, u, v)
                out.append(decode_with(part))
        return out, steps, steps


def _bilinear_corner_blend(corners, u, v):
    a, r1, r2, r3 = corners
    if u == 0.0 and v == 0.0:
        return a
    term = ag.add(
        ag.add(ag.mul(a, (1 - u) * (1 - v)), ag.mul(r1, (1 - u) * v)),
        ag.add(ag.mul(r2, u * (1 - v)), ag.mul(r3, u * v)),
    )
    return term


def interpolate_matrix(image, ref1, i, ref2, j, rows, cols, model):
    """rows x cols grid blending attribute i toward ref1 and j toward ref2.

    Cell (r, c) applies alpha_i = r/(rows-1) and alpha_j = c/(cols-1)
    simultaneously before a single decode. Returns images row-major.
    """
    if i == j:
        raise ContractError("the two attributes must differ")
    n = model.config.n_attributes
    if not (0 <= i < n and 0 <= j < n):
        raise ContractError(f"attribute indices ({i}, {j}) out of range for n={n}")
    if rows < 2 or cols < 2:
        raise ContractError("rows and cols must be >= 2")
    with ag.no_grad():
        parts_a, cuts_a = _encode_one(model, image)
        img_t = Tensor(to_nchw(np.asarray(image), model.dtype))
        part_i_ref = _encode_one(model, ref1)[0][i]
        part_j_ref = _encode_one(model, ref2)[0][j]
        out = []
        for r in range(rows):
            ai = r / (rows - 1)
            for c in range(cols):
                aj = c / (cols - 1)
                parts = list(parts_a)
                parts[i] = _blend(parts_a[i], part_i_ref, ai)
                parts[j] = _blend(parts_a[j], part_j_ref, aj)
                out.append(_decode_compose(model, img_t, parts, parts_a, cuts_a))
    return out


def transfer_pairs(model, dataset, i, limit=None, chunk=32):
    """Batched (C, D) transfers over paired positive/negative samples.

    The k-th positive (by filename) pairs with the k-th negative, so the
    result is invariant to how the dataset rows happen to be ordered.
    Returns (c_images, d_images) as HWC arrays.
    """
    pos, neg = dataset.table.pools(i)
    count = min(len(pos), len(neg))
    if limit is not None:
        count = min(count, limit)
    names = dataset.table.filenames
    pos = pos[np.argsort([names[k] for k in pos])][:count]
    neg = neg[np.argsort([names[k] for k in neg])][:count]
    cs, ds = [], []
    with ag.no_grad():
        for k0 in range(0, count, chunk):
            ia = pos[k0 : k0 + chunk]
            ib = neg[k0 : k0 + chunk]
            a, _ = dataset.batch(ia)
            b, _ = dataset.batch(ib)
            a_t, b_t = Tensor(a), Tensor(b)
            parts_a, cuts_a = encode_t(model, a_t)
            parts_b, cuts_b = encode_t(model, b_t)
            parts_c = list(parts_a)
            parts_d = list(parts_b)
            parts_c[i], parts_d[i] = parts_b[i], parts_a[i]
            c = compose_t(a_t, decode_t(model, parts_c, parts_a, cuts_a)).data
            d = compose_t(b_t, decode_t(model, parts_d, parts_b, cuts_b)).data
            cs.append(np.transpose(c, (0, 2, 3, 1)))
            ds.append(np.transpose(d, (0, 2, 3, 1)))
    return np.concatenate(cs), np.concatenate(ds)


def transfer_accuracy(model, dataset, oracle, i, limit=None):
    """Fraction of pairs where C lost attribute i and D gained it."""
    cs, ds = transfer_pairs(model, dataset, i, limit)
    if len(cs) == 0:
        return 0.0
    hits = sum(
        1
        for c, d in zip(cs, ds)
        if oracle.classify(c, i) == 0 and oracle.classify(d, i) == 1
    )
    return hits / len(cs)


def emit_grid(images, rows, cols, path=None, gutter=2):
    """Tile images row-major into one PNG with a white gutter between cells."""
    images = list(images)
    if len(images) != rows * cols:
        raise ContractError(f"{len(images)} images cannot fill a {rows}x{cols} grid")
    tiles = [np.asarray(im) for im in images]
    tiles = [denormalize(t) if t.dtype != np.uint8 else t for t in tiles]
    h, w, _ = tiles[0].shape
    if any(t.shape != (h, w, 3) for t in tiles):
        raise ContractError("grid images must share one shape")
    canvas = np.full(
        (rows * h + gutter * (rows - 1), cols * w + gutter * (cols - 1), 3), 255, np.uint8
    )
    for k, tile in enumerate(tiles):
        r, c = divmod(k, cols)
        y, x = r * (h + gutter), c * (w + gutter)
        canvas[y : y + h, x : x + w] = tile
    if path is not None:
        Image.fromarray(canvas).save(path)
    return canvas


def evaluation_report(model, dataset, oracle, extractor_name="default", limit=None):
    """Per-attribute FID (add/remove, against the matching real pool) plus
    oracle transfer accuracy. Mirrors the +/- structure of the usual
    attribute-transfer comparison tables."""
    extractor = get_extractor(extractor_name)
    report = {"fid_per_attribute": {}, "transfer_accuracy": {}}
    for i, name in enumerate(dataset.attribute_names):
        cs, ds = transfer_pairs(model, dataset, i, limit)
        pos, neg = dataset.table.pools(i)
        real_pos = [np.transpose(im, (1, 2, 0)) for im in dataset.batch(pos)[0]]
        real_neg = [np.transpose(im, (1, 2, 0)) for im in dataset.batch(neg)[0]]
        stats = {
            "gen_add": gaussian_stats(features_of(ds, extractor)),
            "gen_remove": gaussian_stats(features_of(cs, extractor)),
            "real_pos": gaussian_stats(features_of(real_pos, extractor)),
            "real_neg": gaussian_stats(features_of(real_neg, extractor)),
        }
        report["fid_per_attribute"][name] = {
            "add": fid(stats["gen_add"], stats["real_pos"]),
            "remove": fid(stats["gen_remove"], stats["real_neg"]),
        }
        hits = sum(
            1
            for c, d in zip(cs, ds)
            if oracle.classify(c, i) == 0 and oracle.classify(d, i) == 1
        )
        report["transfer_accuracy"][name] = hits / len(cs) if len(cs) else 0.0
    return report


def dataset_comparison_report(dataset_a, dataset_b, extractor_name="default"):
    """Per-attribute FID between the matching pools of two datasets.

    `add` compares the positive pools, `remove` the negative pools; two
    identical datasets therefore report ~0 everywhere. Useful as a
    calibration/self-test path for the metric stack."""
    extractor = get_extractor(extractor_name)
    report = {"fid_per_attribute": {}, "transfer_accuracy": {}}
    for i, name in enumerate(dataset_a.attribute_names):
        out = {}
        for key, which in (("add", 1), ("remove", 0)):
            pools = []
            for ds in (dataset_a, dataset_b):
                idx = ds.table.pools(i)[0 if which == 1 else 1]
                imgs = [np.transpose(im, (1, 2, 0)) for im in ds.batch(idx)[0]]
                pools.append(gaussian_stats(features_of(imgs, extractor)))
            out[key] = fid(pools[1], pools[0])
        report["fid_per_attribute"][name] = out
    return report


def write_report(report, path):
    Path(path).write_text(json.dumps(report, indent=2) + "\n")
