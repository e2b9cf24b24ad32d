"""Compiled kernels: weight generation and dynamic-programming sweeps.

Everything in this module is deterministic given the 64-bit field key, so
any cell, row, or whole instance can be regenerated independently on any
worker in any order.  All float arithmetic is strict IEEE double (no
fastmath), which makes every kernel bit-reproducible for a fixed code
version.

Conventions used by every sweep:
  * path weight excludes the source vertex and includes the target;
  * DP recurrence T(p) = w(p) + max(T(p-(1,0)), T(p-(0,1)));
  * on exact predecessor ties the horizontal predecessor (p-(1,0)) wins,
    i.e. the (0,1) predecessor loses;
  * argmax scans over a line keep the smallest-psi endpoint on ties.
"""

import numpy as np
from llvmlite import ir
from numba import njit, types
from numba.extending import intrinsic

U64 = np.uint64
I64 = np.int64
F64 = np.float64

JIT_OPTS = dict(cache=True, nogil=True, error_model="numpy")

# splitmix64 finalizer constants
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)
_GOLDEN = U64(0x9E3779B97F4A7C15)
_DOMAIN = U64(0x7C6C705069D2E981)  # fixed domain-separation constant

# -ln on (0,1): exponent/mantissa split with an atanh series centred at
# sqrt(2).  Constants are double-double splits so e*ln2 stays exact for
# |e| <= 53 (LN2_HI carries 33 significant bits).
_LN2_HI = 0.6931471803691238
_LN2_LO = 1.9082149292705877e-10
_SQRT2 = 1.4142135623730951
_LN_SQRT2_HI = 0.3465735902799727
_LN_SQRT2_LO = -7.713244073615327e-18
_EXP_ONE = U64(0x3FF0000000000000)
_MANT_MASK = U64(0x000FFFFFFFFFFFFF)
_MIN_W = 5e-324  # smallest positive subnormal; keeps weights > 0

NEG_INF = -np.inf


@intrinsic
def _f64_to_bits(typingctx, val):
    sig = types.uint64(types.float64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], ir.IntType(64))

    return sig, codegen


@intrinsic
def _bits_to_f64(typingctx, val):
    sig = types.float64(types.uint64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], ir.DoubleType())

    return sig, codegen


@njit(**JIT_OPTS)
def mix64(z):
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(**JIT_OPTS)
def key_combine(h, word):
    return mix64(h ^ (word + _GOLDEN))


@njit(**JIT_OPTS)
def field_key(master_seed, replicate):
    return key_combine(key_combine(_DOMAIN, master_seed), replicate)


@njit(**JIT_OPTS)
def exp_from_hash(h):
    # odd 53-bit integer k; u = k * 2^-53 lies strictly inside (0, 1)
    k = ((h >> U64(12)) << U64(1)) | U64(1)
    d = F64(k)
    bits = _f64_to_bits(d)
    e = F64(I64(bits >> U64(52)) - I64(1076))  # unbiased exponent minus 53
    m = _bits_to_f64((bits & _MANT_MASK) | _EXP_ONE)
    z = (m - _SQRT2) / (m + _SQRT2)
    y = z * z
    y2 = y * y
    p = (1.0 + y * (1.0 / 3.0)) + y2 * ((1.0 / 5.0) + y * (1.0 / 7.0)) + (y2 * y2) * (
        (1.0 / 9.0) + y * (1.0 / 11.0)
    )
    w = -(e * _LN2_HI + (_LN_SQRT2_HI + (e * _LN2_LO + (_LN_SQRT2_LO + 2.0 * z * p))))
    return max(w, _MIN_W)


@njit(**JIT_OPTS)
def cell_weight(fkey, x, y):
    return exp_from_hash(key_combine(key_combine(fkey, U64(y)), U64(x)))


@njit(**JIT_OPTS)
def fill_weight_row(fkey, y, x0, width, out):
    """Weights of cells (x0 .. x0+width-1, y) into out[:width]."""
    rk = key_combine(fkey, U64(y))
    for j in range(width):
        h = mix64(rk ^ (U64(x0 + j) + _GOLDEN))
        k = ((h >> U64(12)) << U64(1)) | U64(1)
        d = F64(k)
        bits = _f64_to_bits(d)
        e = F64(I64(bits >> U64(52)) - I64(1076))
        m = _bits_to_f64((bits & _MANT_MASK) | _EXP_ONE)
        z = (m - _SQRT2) / (m + _SQRT2)
        y_ = z * z
        y2 = y_ * y_
        p = (1.0 + y_ * (1.0 / 3.0)) + y2 * ((1.0 / 5.0) + y_ * (1.0 / 7.0)) + (
            y2 * y2
        ) * ((1.0 / 9.0) + y_ * (1.0 / 11.0))
        w = -(e * _LN2_HI + (_LN_SQRT2_HI + (e * _LN2_LO + (_LN_SQRT2_LO + 2.0 * z * p))))
        out[j] = max(w, _MIN_W)


@njit(**JIT_OPTS)
def weights_block(fkey, x0, y0, width, height):
    out = np.empty((height, width), np.float64)
    for i in range(height):
        fill_weight_row(fkey, y0 + i, x0, width, out[i])
    return out


# ---------------------------------------------------------------------------
# point-to-point and point-to-line sweeps (single instance)
# ---------------------------------------------------------------------------


@njit(**JIT_OPTS)
def _scan_row(row, w, width):
    """In-place DP row update: row[j] = w[j] + max(row[j], row[j-1])."""
    prev = row[0] + w[0]
    row[0] = prev
    for j in range(1, width):
        t = row[j]
        if prev >= t:  # ties: horizontal predecessor wins
            t = prev
        prev = t + w[j]
        row[j] = prev


@njit(**JIT_OPTS)
def pp_value(fkey, ux, uy, dx, dy):
    """Passage time from (ux,uy) to (ux+dx, uy+dy), source weight excluded."""
    width = dx + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    fill_weight_row(fkey, uy, ux, width, w)
    row[0] = 0.0
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    for i in range(1, dy + 1):
        fill_weight_row(fkey, uy + i, ux, width, w)
        _scan_row(row, w, width)
    return row[width - 1]


@njit(**JIT_OPTS)
def pp_value_and_bits(fkey, ux, uy, dx, dy, bits):
    """Passage time plus packed direction bits (1 = predecessor to the left).

    bits must hold stride64(dx+1) * (dy+1) uint64 words; rows are word
    aligned so the stride is (dx+1+63)//64 words.
    """
    width = dx + 1
    stride = (width + 63) >> 6
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    fill_weight_row(fkey, uy, ux, width, w)
    row[0] = 0.0
    for word in range(stride):
        bits[word] = U64(0xFFFFFFFFFFFFFFFF)  # bottom row: everything from left
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    for i in range(1, dy + 1):
        fill_weight_row(fkey, uy + i, ux, width, w)
        base = i * stride
        for word in range(stride):
            bits[base + word] = U64(0)
        prev = row[0] + w[0]  # left column: only from below, bit stays 0
        row[0] = prev
        for j in range(1, width):
            t = row[j]
            if prev >= t:
                t = prev
                bits[base + (j >> 6)] |= U64(1) << U64(j & 63)
            prev = t + w[j]
            row[j] = prev
    return row[width - 1]


@njit(**JIT_OPTS)
def backtrack_bits(bits, dx, dy):
    """Recover the path (relative coordinates) from a direction bitmap."""
    width = dx + 1
    stride = (width + 63) >> 6
    length = dx + dy + 1
    path = np.empty((length, 2), np.int64)
    x = dx
    y = dy
    for step in range(length - 1, -1, -1):
        path[step, 0] = x
        path[step, 1] = y
        if x > 0 and (y == 0 or (bits[y * stride + (x >> 6)] >> U64(x & 63)) & U64(1)):
            x -= 1
        elif y > 0:
            y -= 1
    return path


@njit(**JIT_OPTS)
def ptl_value(fkey, ux, uy, target_phi):
    """Point-to-line passage time and argmax endpoint on {x+y = target_phi}.

    Returns (value, x, y) with ties resolved toward the smaller-psi endpoint.
    """
    depth = target_phi - (ux + uy)
    width = depth + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    fill_weight_row(fkey, uy, ux, width, w)
    row[0] = 0.0
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    best = row[width - 1]
    best_y = uy
    for i in range(1, depth + 1):
        wy = width - i
        fill_weight_row(fkey, uy + i, ux, wy, w)
        _scan_row(row, w, wy)
        v = row[wy - 1]
        if v > best:  # strict: first max has the smallest psi
            best = v
            best_y = uy + i
    return best, target_phi - best_y, best_y


@njit(**JIT_OPTS)
def ptl_value_and_bits(fkey, ux, uy, target_phi, bits):
    """Point-to-line sweep with direction bits over the triangular region.

    Rows use the full-width word-aligned stride of the first row.
    """
    depth = target_phi - (ux + uy)
    width = depth + 1
    stride = (width + 63) >> 6
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    fill_weight_row(fkey, uy, ux, width, w)
    row[0] = 0.0
    for word in range(stride):
        bits[word] = U64(0xFFFFFFFFFFFFFFFF)
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    best = row[width - 1]
    best_y = uy
    for i in range(1, depth + 1):
        wy = width - i
        fill_weight_row(fkey, uy + i, ux, wy, w)
        base = i * stride
        for word in range((wy + 63) >> 6):
            bits[base + word] = U64(0)
        prev = row[0] + w[0]
        row[0] = prev
        for j in range(1, wy):
            t = row[j]
            if prev >= t:
                t = prev
                bits[base + (j >> 6)] |= U64(1) << U64(j & 63)
            prev = t + w[j]
            row[j] = prev
        v = row[wy - 1]
        if v > best:
            best = v
            best_y = uy + i
    return best, target_phi - best_y, best_y


@njit(**JIT_OPTS)
def multi_source_value(fkey, src_col, ex, ey, vx, vy):
    """One-pass multi-source sup: max_s T(s, v) over interval sources.

    src_col[i] gives the column index (relative to ex) of the source lying
    on row ey+i, or -1 when that row has none; sources sit on a common
    anti-diagonal so each row holds at most one.  Unreachable cells carry
    -inf.  Source cells take value max(DP value, 0) inside the scan so that
    cells to their right on the same row see the source immediately.
    """
    width = vx - ex + 1
    height = vy - ey + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    for j in range(width):
        row[j] = NEG_INF
    for i in range(height):
        fill_weight_row(fkey, ey + i, ex, width, w)
        sj = src_col[i] if i < len(src_col) else -1
        prev = NEG_INF
        for j in range(width):
            t = row[j]
            if prev >= t:
                t = prev
            val = t + w[j]
            if j == sj and val < 0.0:
                val = 0.0
            prev = val
            row[j] = val
    return row[width - 1]


# ---------------------------------------------------------------------------
# batched replicate kernels
# ---------------------------------------------------------------------------
#
# The heavy estimators process replicates in groups of four with the row
# scans interleaved: four independent max/add chains hide the floating-point
# latency that a single chain is bound by.  Lane arithmetic is independent,
# so a replicate's outputs are bit-identical whether it ran in a group of
# four or alone; chunking therefore never affects results.


@njit(**JIT_OPTS)
def _scan_row4(rows, ws, width):
    p0 = rows[0, 0] + ws[0, 0]
    p1 = rows[1, 0] + ws[1, 0]
    p2 = rows[2, 0] + ws[2, 0]
    p3 = rows[3, 0] + ws[3, 0]
    rows[0, 0] = p0
    rows[1, 0] = p1
    rows[2, 0] = p2
    rows[3, 0] = p3
    for j in range(1, width):
        t0 = rows[0, j]
        t1 = rows[1, j]
        t2 = rows[2, j]
        t3 = rows[3, j]
        if p0 >= t0:
            t0 = p0
        if p1 >= t1:
            t1 = p1
        if p2 >= t2:
            t2 = p2
        if p3 >= t3:
            t3 = p3
        p0 = t0 + ws[0, j]
        p1 = t1 + ws[1, j]
        p2 = t2 + ws[2, j]
        p3 = t3 + ws[3, j]
        rows[0, j] = p0
        rows[1, j] = p1
        rows[2, j] = p2
        rows[3, j] = p3


@njit(**JIT_OPTS)
def pp_value_batch(master_seed, rep_lo, rep_hi, n, out):
    """T(0, (n,n)) for replicates [rep_lo, rep_hi); out[i] = value."""
    width = n + 1
    nrep = rep_hi - rep_lo
    ngroup = nrep // 4
    ws = np.empty((4, width), np.float64)
    rows = np.empty((4, width), np.float64)
    fkeys = np.empty(4, np.uint64)
    for g in range(ngroup):
        for r in range(4):
            fkeys[r] = field_key(U64(master_seed), U64(rep_lo + 4 * g + r))
            fill_weight_row(fkeys[r], 0, 0, width, ws[r])
            rows[r, 0] = 0.0
            for j in range(1, width):
                rows[r, j] = rows[r, j - 1] + ws[r, j]
        for i in range(1, n + 1):
            for r in range(4):
                fill_weight_row(fkeys[r], i, 0, width, ws[r])
            _scan_row4(rows, ws, width)
        for r in range(4):
            out[4 * g + r] = rows[r, width - 1]
    for k in range(4 * ngroup, nrep):
        fk = field_key(U64(master_seed), U64(rep_lo + k))
        out[k] = pp_value(fk, 0, 0, n, n)


@njit(**JIT_OPTS)
def profile_batch(master_seed, rep_lo, rep_hi, n, want_mid, psi_mid, psi_end, sup_line, t_pp):
    """Batched forward(+backward) profiles; groups of four replicates.

    Outputs are per-replicate arrays of length rep_hi-rep_lo.
    """
    width = 2 * n + 1
    nrep = rep_hi - rep_lo
    ngroup = nrep // 4
    ws = np.empty((4, width), np.float64)
    rows = np.empty((4, width), np.float64)
    midfwd = np.empty((4, n + 1), np.float64)
    wab = np.empty((4, n + 2), np.float64)
    wcur = np.empty((4, n + 2), np.float64)
    bbuf = np.empty((4, n + 1), np.float64)
    score_best = np.empty(4, np.float64)
    score_y = np.empty(4, np.int64)
    fkeys = np.empty(4, np.uint64)
    for g in range(ngroup):
        base = 4 * g
        for r in range(4):
            fkeys[r] = field_key(U64(master_seed), U64(rep_lo + base + r))
            fill_weight_row(fkeys[r], 0, 0, width, ws[r])
            rows[r, 0] = 0.0
            for j in range(1, width):
                rows[r, j] = rows[r, j - 1] + ws[r, j]
            if want_mid:
                midfwd[r, 0] = rows[r, n]
            sup_line[base + r] = rows[r, width - 1]
            psi_end[base + r] = -2 * n
        for y in range(1, 2 * n + 1):
            wy = width - y
            for r in range(4):
                fill_weight_row(fkeys[r], y, 0, wy, ws[r])
            _scan_row4(rows, ws, wy)
            for r in range(4):
                if want_mid and y <= n:
                    midfwd[r, y] = rows[r, n - y]
                if y == n:
                    t_pp[base + r] = rows[r, wy - 1]
                v = rows[r, wy - 1]
                if v > sup_line[base + r]:
                    sup_line[base + r] = v
                    psi_end[base + r] = 2 * y - 2 * n
        if want_mid:
            # backward pass: B(x, y) = T((x,y), (n,n)), rows y = n .. 0,
            # valid for x in [n-y, n]
            for r in range(4):
                fill_weight_row(fkeys[r], n, 0, n + 1, wab[r])
                bbuf[r, n] = 0.0
                for x in range(n - 1, -1, -1):
                    bbuf[r, x] = bbuf[r, x + 1] + wab[r, x + 1]
                score_best[r] = midfwd[r, n] + bbuf[r, 0]
                score_y[r] = n
            for y in range(n - 1, -1, -1):
                for r in range(4):
                    fill_weight_row(fkeys[r], y, n - y - 1, y + 2, wcur[r])
                    # wcur[r][j] = w(n-y-1+j, y); cell x -> index x-(n-y-1)
                    b_up = bbuf[r, n]
                    bbuf[r, n] = wab[r, n] + b_up  # only the up step at x = n
                    prev = bbuf[r, n]
                    for x in range(n - 1, n - y - 1, -1):
                        up = wab[r, x] + bbuf[r, x]
                        right = wcur[r, x - (n - y - 1) + 1] + prev
                        if right >= up:  # ties: horizontal step wins
                            prev = right
                        else:
                            prev = up
                        bbuf[r, x] = prev
                    sc = midfwd[r, y] + bbuf[r, n - y]
                    if sc >= score_best[r]:  # descending scan: >= keeps smallest y
                        score_best[r] = sc
                        score_y[r] = y
                    # rotate weight rows: current row becomes the row above
                    for x in range(n - y - 1, n + 1):
                        wab[r, x] = wcur[r, x - (n - y - 1)]
            for r in range(4):
                psi_mid[base + r] = 2 * score_y[r] - n
    # remainder replicates, one at a time through the same lane arithmetic
    for k in range(4 * ngroup, nrep):
        _profile_one(master_seed, rep_lo + k, n, want_mid, psi_mid, psi_end, sup_line, t_pp, k)


@njit(**JIT_OPTS)
def _profile_one(master_seed, rep, n, want_mid, psi_mid, psi_end, sup_line, t_pp, slot):
    width = 2 * n + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    midfwd = np.empty(n + 1, np.float64)
    wab = np.empty(n + 2, np.float64)
    wcur = np.empty(n + 2, np.float64)
    bbuf = np.empty(n + 1, np.float64)
    fk = field_key(U64(master_seed), U64(rep))
    fill_weight_row(fk, 0, 0, width, w)
    row[0] = 0.0
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    if want_mid:
        midfwd[0] = row[n]
    sup = row[width - 1]
    by = 0
    tpp = 0.0
    for y in range(1, 2 * n + 1):
        wy = width - y
        fill_weight_row(fk, y, 0, wy, w)
        _scan_row(row, w, wy)
        if want_mid and y <= n:
            midfwd[y] = row[n - y]
        if y == n:
            tpp = row[wy - 1]
        v = row[wy - 1]
        if v > sup:
            sup = v
            by = y
    sup_line[slot] = sup
    psi_end[slot] = 2 * by - 2 * n
    t_pp[slot] = tpp
    if want_mid:
        fill_weight_row(fk, n, 0, n + 1, wab)
        bbuf[n] = 0.0
        for x in range(n - 1, -1, -1):
            bbuf[x] = bbuf[x + 1] + wab[x + 1]
        sbest = midfwd[n] + bbuf[0]
        sy = n
        for y in range(n - 1, -1, -1):
            fill_weight_row(fk, y, n - y - 1, y + 2, wcur)
            b_up = bbuf[n]
            bbuf[n] = wab[n] + b_up
            prev = bbuf[n]
            for x in range(n - 1, n - y - 1, -1):
                up = wab[x] + bbuf[x]
                right = wcur[x - (n - y - 1) + 1] + prev
                if right >= up:
                    prev = right
                else:
                    prev = up
                bbuf[x] = prev
            sc = midfwd[y] + bbuf[n - y]
            if sc >= sbest:
                sbest = sc
                sy = y
            for x in range(n - y - 1, n + 1):
                wab[x] = wcur[x - (n - y - 1)]
        psi_mid[slot] = 2 * sy - n


@njit(**JIT_OPTS)
def mid_psi_batch(master_seed, rep_lo, rep_hi, n, psi_mid):
    """Crossing psi of the geodesic 0 -> (n,n) on {x+y=n}, per replicate.

    Forward sweep only reaches {x+y=n}, so this costs about half of
    profile_batch when the endpoint statistics are not needed.
    """
    width = n + 1
    nrep = rep_hi - rep_lo
    ngroup = nrep // 4
    ws = np.empty((4, width), np.float64)
    rows = np.empty((4, width), np.float64)
    midfwd = np.empty((4, n + 1), np.float64)
    wab = np.empty((4, n + 2), np.float64)
    wcur = np.empty((4, n + 2), np.float64)
    bbuf = np.empty((4, n + 1), np.float64)
    fkeys = np.empty(4, np.uint64)
    for g in range(ngroup):
        base = 4 * g
        for r in range(4):
            fkeys[r] = field_key(U64(master_seed), U64(rep_lo + base + r))
            fill_weight_row(fkeys[r], 0, 0, width, ws[r])
            rows[r, 0] = 0.0
            for j in range(1, width):
                rows[r, j] = rows[r, j - 1] + ws[r, j]
            midfwd[r, 0] = rows[r, n]
        for y in range(1, n + 1):
            wy = width - y
            for r in range(4):
                fill_weight_row(fkeys[r], y, 0, wy, ws[r])
            _scan_row4(rows, ws, wy)
            for r in range(4):
                midfwd[r, y] = rows[r, n - y]
        for r in range(4):
            fill_weight_row(fkeys[r], n, 0, n + 1, wab[r])
            bbuf[r, n] = 0.0
            for x in range(n - 1, -1, -1):
                bbuf[r, x] = bbuf[r, x + 1] + wab[r, x + 1]
        sbest = np.empty(4, np.float64)
        sy = np.empty(4, np.int64)
        for r in range(4):
            sbest[r] = midfwd[r, n] + bbuf[r, 0]
            sy[r] = n
        for y in range(n - 1, -1, -1):
            for r in range(4):
                fill_weight_row(fkeys[r], y, n - y - 1, y + 2, wcur[r])
                b_up = bbuf[r, n]
                bbuf[r, n] = wab[r, n] + b_up
                prev = bbuf[r, n]
                for x in range(n - 1, n - y - 1, -1):
                    up = wab[r, x] + bbuf[r, x]
                    right = wcur[r, x - (n - y - 1) + 1] + prev
                    if right >= up:
                        prev = right
                    else:
                        prev = up
                    bbuf[r, x] = prev
                sc = midfwd[r, y] + bbuf[r, n - y]
                if sc >= sbest[r]:
                    sbest[r] = sc
                    sy[r] = y
                for x in range(n - y - 1, n + 1):
                    wab[r, x] = wcur[r, x - (n - y - 1)]
        for r in range(4):
            psi_mid[base + r] = 2 * sy[r] - n
    for k in range(4 * ngroup, nrep):
        _mid_psi_one(master_seed, rep_lo + k, n, psi_mid, k)


@njit(**JIT_OPTS)
def _mid_psi_one(master_seed, rep, n, psi_mid, slot):
    width = n + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    midfwd = np.empty(n + 1, np.float64)
    wab = np.empty(n + 2, np.float64)
    wcur = np.empty(n + 2, np.float64)
    bbuf = np.empty(n + 1, np.float64)
    fk = field_key(U64(master_seed), U64(rep))
    fill_weight_row(fk, 0, 0, width, w)
    row[0] = 0.0
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    midfwd[0] = row[n]
    for y in range(1, n + 1):
        wy = width - y
        fill_weight_row(fk, y, 0, wy, w)
        _scan_row(row, w, wy)
        midfwd[y] = row[n - y]
    fill_weight_row(fk, n, 0, n + 1, wab)
    bbuf[n] = 0.0
    for x in range(n - 1, -1, -1):
        bbuf[x] = bbuf[x + 1] + wab[x + 1]
    sbest = midfwd[n] + bbuf[0]
    sy = n
    for y in range(n - 1, -1, -1):
        fill_weight_row(fk, y, n - y - 1, y + 2, wcur)
        b_up = bbuf[n]
        bbuf[n] = wab[n] + b_up
        prev = bbuf[n]
        for x in range(n - 1, n - y - 1, -1):
            up = wab[x] + bbuf[x]
            right = wcur[x - (n - y - 1) + 1] + prev
            if right >= up:
                prev = right
            else:
                prev = up
            bbuf[x] = prev
        sc = midfwd[y] + bbuf[n - y]
        if sc >= sbest:
            sbest = sc
            sy = y
        for x in range(n - y - 1, n + 1):
            wab[x] = wcur[x - (n - y - 1)]
    psi_mid[slot] = 2 * sy - n


@njit(**JIT_OPTS)
def fwd_line_profile(fkey, ux, uy, target_phi, out):
    """T(u, p) for every p on {x+y=target_phi} reachable from u.

    out[i] is the value at the point with y = uy + i, i in [0, depth].
    """
    depth = target_phi - (ux + uy)
    width = depth + 1
    w = np.empty(width, np.float64)
    row = np.empty(width, np.float64)
    fill_weight_row(fkey, uy, ux, width, w)
    row[0] = 0.0
    for j in range(1, width):
        row[j] = row[j - 1] + w[j]
    out[0] = row[width - 1]
    for i in range(1, depth + 1):
        wy = width - i
        fill_weight_row(fkey, uy + i, ux, wy, w)
        _scan_row(row, w, wy)
        out[i] = row[wy - 1]


@njit(**JIT_OPTS)
def bwd_line_profile(fkey, wx, wy_, target_phi, out):
    """T(p, w) for every p on {x+y=target_phi} that can reach w=(wx,wy_).

    out[i] is the value at the point with y = wy_ - depth + i, where
    depth = (wx+wy_) - target_phi; index i runs over [0, depth].
    """
    depth = (wx + wy_) - target_phi
    wa = np.empty(depth + 2, np.float64)
    wc = np.empty(depth + 2, np.float64)
    b = np.empty(depth + 1, np.float64)
    # b[k] holds B at x = wx - depth + k ... wx on the current row
    fill_weight_row(fkey, wy_, wx - depth, depth + 1, wa[: depth + 1])
    b[depth] = 0.0
    for k in range(depth - 1, -1, -1):
        b[k] = b[k + 1] + wa[k + 1]
    out[depth] = b[0]  # row y = wy_, line point x = wx - depth
    for step in range(1, depth + 1):
        y = wy_ - step
        # valid x on this row: [wx - depth + step, wx]; line point at left edge
        x0 = wx - depth + step - 1
        fill_weight_row(fkey, y, x0, depth - step + 2, wc)
        # wc[j] = w(x0 + j, y); cell x -> j = x - x0
        b_up = b[depth]
        b[depth] = wa[depth] + b_up  # x = wx: only the up step
        prev = b[depth]
        for k in range(depth - 1, step - 1, -1):
            up = wa[k] + b[k]
            right = wc[k - step + 2] + prev
            if right >= up:
                prev = right
            else:
                prev = up
            b[k] = prev
        out[depth - step] = b[step]
        for k in range(step - 1, depth + 1):
            wa[k] = wc[k - step + 1]
    return 0


@njit(**JIT_OPTS)
def gamma_hits_batch(master_seed, rep_lo, rep_hi, n, gn, disp, hw, counts):
    """Counts per replicate of interval sources whose geodesic hits its target.

    Sources v = (hw+a, hw-a) for a in [-hw, hw] (the interval shifted onto
    the quadrant diagonal); a source counts when the geodesic v -> v+(n,n)
    crosses the line through v + (gn - disp, gn + disp) exactly at that
    point.  gn must equal gamma*n as an integer.
    """
    line_phi_rel = 2 * gn
    fdepth = line_phi_rel
    bdepth = 2 * n - line_phi_rel
    fprof = np.empty(fdepth + 1, np.float64)
    bprof = np.empty(bdepth + 1, np.float64)
    for k in range(rep_hi - rep_lo):
        fk = field_key(U64(master_seed), U64(rep_lo + k))
        cnt = 0
        for a in range(-hw, hw + 1):
            vx = hw + a
            vy = hw - a
            target_phi = vx + vy + line_phi_rel
            fwd_line_profile(fk, vx, vy, target_phi, fprof)
            bwd_line_profile(fk, vx + n, vy + n, target_phi, bprof)
            # fwd covers line y in [vy, vy+fdepth]; bwd covers [vy+n-bdepth, vy+n]
            lo = max(vy, vy + n - bdepth)
            hi = min(vy + fdepth, vy + n)
            best = NEG_INF
            besty = lo
            for y in range(lo, hi + 1):
                s = fprof[y - vy] + bprof[y - (vy + n - bdepth)]
                if s > best:
                    best = s
                    besty = y
            if besty - vy == gn + disp:
                cnt += 1
        counts[k] = cnt


@njit(**JIT_OPTS)
def end_hits_batch(master_seed, rep_lo, rep_hi, n, disp, hw, counts):
    """Counts per replicate of interval sources whose point-to-line geodesic
    ends at the shifted scaled endpoint (source interval on the diagonal)."""
    for k in range(rep_hi - rep_lo):
        fk = field_key(U64(master_seed), U64(rep_lo + k))
        cnt = 0
        for a in range(-hw, hw + 1):
            vx = hw + a
            vy = hw - a
            val, ex, ey = ptl_value(fk, vx, vy, vx + vy + 2 * n)
            if ey - vy == n + disp:
                cnt += 1
        counts[k] = cnt


@njit(**JIT_OPTS)
def interval_inf_batch(master_seed, rep_lo, rep_hi, n, hw, out):
    """inf over interval sources of the point-to-line passage time to the
    line at phi-distance 2n from the interval's anti-diagonal."""
    for k in range(rep_hi - rep_lo):
        fk = field_key(U64(master_seed), U64(rep_lo + k))
        best = np.inf
        for a in range(-hw, hw + 1):
            vx = hw + a
            vy = hw - a
            val, ex, ey = ptl_value(fk, vx, vy, vx + vy + 2 * n)
            if val < best:
                best = val
        out[k] = best


# ---------------------------------------------------------------------------
# exhaustive enumeration (oracle support)
# ---------------------------------------------------------------------------


@njit(**JIT_OPTS)
def brute_max_rec(w, x, y, dx, dy, acc):
    """Maximum path sum over up/right paths (x,y) -> (dx,dy) on the weight
    block w, source weight excluded from acc by the caller."""
    if x == dx and y == dy:
        return acc
    best = NEG_INF
    if x < dx:
        v = brute_max_rec(w, x + 1, y, dx, dy, acc + w[y, x + 1])
        if v > best:
            best = v
    if y < dy:
        v = brute_max_rec(w, x, y + 1, dx, dy, acc + w[y + 1, x])
        if v > best:
            best = v
    return best
