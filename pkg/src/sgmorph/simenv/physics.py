"""Planar rigid-body kernel (maximal coordinates, sequential impulses).

Bodies carry position (x, z), angle, linear and angular velocity. A body's
local point ``r`` maps to world as ``pos + R(angle) r``. Each substep:

1. external forces (gravity, motor torques) update velocities;
2. a Gauss-Seidel pass over velocity constraints: revolute point joints with
   Baumgarte feedback, implicit spring-dampers for the passive joint spring,
   joint limits and ground contact normals, and Coulomb-capped friction;
3. positions integrate with the corrected velocities (semi-implicit Euler).

Spring-dampers use the soft-constraint form, i.e. implicit Euler of
``F = -k C - c dC/dt``, so stiff values stay stable at 240 Hz.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _rot(angle, lx, ly):
    c = np.cos(angle)
    s = np.sin(angle)
    return c * lx - s * ly, s * lx + c * ly


@njit(cache=True)
def terrain_height(blocks, x):
    h = 0.0
    for b in range(blocks.shape[0]):
        if blocks[b, 0] <= x < blocks[b, 0] + blocks[b, 1]:
            h = blocks[b, 2]
    return h


@njit(cache=True)
def _contact_geometry(blocks, px, pz):
    """Signed depth (negative = gap) and outward normal of a point against the terrain."""
    h = terrain_height(blocks, px)
    if pz >= h or h == 0.0:
        return h - pz, 0.0, 1.0
    for b in range(blocks.shape[0]):
        x0 = blocks[b, 0]
        x1 = x0 + blocks[b, 1]
        if x0 <= px < x1:
            d_top = h - pz
            d_left = px - x0
            d_right = x1 - px
            if d_top <= d_left and d_top <= d_right:
                return d_top, 0.0, 1.0
            if d_left <= d_right:
                return d_left, -1.0, 0.0
            return d_right, 1.0, 0.0
    return h - pz, 0.0, 1.0


@njit(cache=True)
def step_bodies(
    pos, ang, vel, angvel, inv_mass, inv_inertia,
    j_parent, j_child, j_anchor_p, j_anchor_c, j_rest, j_torque,
    c_body, c_local, blocks,
    gravity, dt, n_sub, iters, baumgarte,
    k_joint, c_joint, joint_range, k_limit, c_limit,
    k_contact, c_contact, mu, margin,
    diag,
):
    """Advance ``n_sub`` substeps in place.

    Contacts closer than ``margin`` are speculative: the normal impulse only
    stops the point from closing the remaining gap within one substep. Once
    penetrating, the contact becomes the implicit spring-damper.
    ``diag[0]`` accumulates the largest contact penetration seen.
    """
    nb = pos.shape[0]
    nj = j_parent.shape[0]
    nc = c_body.shape[0]

    rpx = np.zeros(nj)
    rpy = np.zeros(nj)
    rcx = np.zeros(nj)
    rcy = np.zeros(nj)
    bx = np.zeros(nj)
    by = np.zeros(nj)
    k11 = np.zeros(nj)
    k12 = np.zeros(nj)
    k22 = np.zeros(nj)
    spring_bias = np.zeros(nj)
    spring_acc = np.zeros(nj)
    lim_bias = np.zeros(nj)
    lim_sign = np.zeros(nj)
    lim_acc = np.zeros(nj)
    ang_mass = np.zeros(nj)

    crx = np.zeros(nc)
    crz = np.zeros(nc)
    cnx = np.zeros(nc)
    cnz = np.zeros(nc)
    cbias = np.zeros(nc)
    cn_acc = np.zeros(nc)
    ct_acc = np.zeros(nc)
    cn_mass = np.zeros(nc)
    cgam = np.zeros(nc)
    ct_mass = np.zeros(nc)
    active = np.zeros(nc, dtype=np.bool_)

    gamma_s = 1.0 / (dt * (c_joint + dt * k_joint))
    gamma_l = 1.0 / (dt * (c_limit + dt * k_limit))
    gamma_c = 1.0 / (dt * (c_contact + dt * k_contact))

    for _ in range(n_sub):
        # external forces
        for b in range(nb):
            if inv_mass[b] > 0.0:
                vel[b, 1] -= gravity * dt
        for j in range(nj):
            p = j_parent[j]
            c = j_child[j]
            angvel[c] += j_torque[j] * inv_inertia[c] * dt
            angvel[p] -= j_torque[j] * inv_inertia[p] * dt

        # joint setup
        for j in range(nj):
            p = j_parent[j]
            c = j_child[j]
            ax, ay = _rot(ang[p], j_anchor_p[j, 0], j_anchor_p[j, 1])
            cx, cy = _rot(ang[c], j_anchor_c[j, 0], j_anchor_c[j, 1])
            rpx[j] = ax
            rpy[j] = ay
            rcx[j] = cx
            rcy[j] = cy
            ex = pos[c, 0] + cx - pos[p, 0] - ax
            ey = pos[c, 1] + cy - pos[p, 1] - ay
            bx[j] = baumgarte / dt * ex
            by[j] = baumgarte / dt * ey
            mp = inv_mass[p]
            mc = inv_mass[c]
            ip = inv_inertia[p]
            ic = inv_inertia[c]
            k11[j] = mp + mc + ip * ay * ay + ic * cy * cy
            k12[j] = -ip * ax * ay - ic * cx * cy
            k22[j] = mp + mc + ip * ax * ax + ic * cx * cx
            w = ip + ic
            ang_mass[j] = w
            q_err = ang[c] - ang[p] - j_rest[j]
            spring_bias[j] = q_err * dt * k_joint * gamma_s
            spring_acc[j] = 0.0
            lim_acc[j] = 0.0
            if q_err > joint_range:
                lim_sign[j] = 1.0
                lim_bias[j] = (q_err - joint_range) * dt * k_limit * gamma_l
            elif q_err < -joint_range:
                lim_sign[j] = -1.0
                lim_bias[j] = (q_err + joint_range) * dt * k_limit * gamma_l
            else:
                lim_sign[j] = 0.0
                lim_bias[j] = 0.0

        # contact setup
        for k in range(nc):
            b = c_body[k]
            lx, ly = _rot(ang[b], c_local[k, 0], c_local[k, 1])
            px = pos[b, 0] + lx
            pz = pos[b, 1] + ly
            depth, nx, nz = _contact_geometry(blocks, px, pz)
            cn_acc[k] = 0.0
            ct_acc[k] = 0.0
            if depth > -margin:
                active[k] = True
                if depth > diag[0]:
                    diag[0] = depth
                crx[k] = lx
                crz[k] = ly
                cnx[k] = nx
                cnz[k] = nz
                rn = lx * nz - ly * nx
                w = inv_mass[b] + inv_inertia[b] * rn * rn
                if depth > 0.0:
                    cgam[k] = gamma_c
                    cbias[k] = -depth * dt * k_contact * gamma_c
                else:
                    cgam[k] = 0.0
                    cbias[k] = -depth / dt
                cn_mass[k] = 1.0 / (w + cgam[k])
                tx = -nz
                tz = nx
                rt = lx * tz - ly * tx
                ct_mass[k] = 1.0 / (inv_mass[b] + inv_inertia[b] * rt * rt)
            else:
                active[k] = False

        for _it in range(iters):
            for j in range(nj):
                p = j_parent[j]
                c = j_child[j]
                # passive spring-damper about the rest angle
                cdot = angvel[c] - angvel[p]
                lam = -(cdot + spring_bias[j] + gamma_s * spring_acc[j]) / (ang_mass[j] + gamma_s)
                spring_acc[j] += lam
                angvel[c] += inv_inertia[c] * lam
                angvel[p] -= inv_inertia[p] * lam
                # one-sided limit spring
                if lim_sign[j] != 0.0:
                    cdot = angvel[c] - angvel[p]
                    lam = -(cdot + lim_bias[j] + gamma_l * lim_acc[j]) / (ang_mass[j] + gamma_l)
                    old = lim_acc[j]
                    if lim_sign[j] > 0.0:
                        lim_acc[j] = min(old + lam, 0.0)
                    else:
                        lim_acc[j] = max(old + lam, 0.0)
                    lam = lim_acc[j] - old
                    angvel[c] += inv_inertia[c] * lam
                    angvel[p] -= inv_inertia[p] * lam
                # point constraint
                vx = vel[c, 0] - angvel[c] * rcy[j] - vel[p, 0] + angvel[p] * rpy[j] + bx[j]
                vy = vel[c, 1] + angvel[c] * rcx[j] - vel[p, 1] - angvel[p] * rpx[j] + by[j]
                det = k11[j] * k22[j] - k12[j] * k12[j]
                lx = -(k22[j] * vx - k12[j] * vy) / det
                ly = -(-k12[j] * vx + k11[j] * vy) / det
                vel[c, 0] += inv_mass[c] * lx
                vel[c, 1] += inv_mass[c] * ly
                angvel[c] += inv_inertia[c] * (rcx[j] * ly - rcy[j] * lx)
                vel[p, 0] -= inv_mass[p] * lx
                vel[p, 1] -= inv_mass[p] * ly
                angvel[p] -= inv_inertia[p] * (rpx[j] * ly - rpy[j] * lx)

            for k in range(nc):
                if not active[k]:
                    continue
                b = c_body[k]
                vpx = vel[b, 0] - angvel[b] * crz[k]
                vpz = vel[b, 1] + angvel[b] * crx[k]
                nx = cnx[k]
                nz = cnz[k]
                vn = vpx * nx + vpz * nz
                lam = -cn_mass[k] * (vn + cbias[k] + cgam[k] * cn_acc[k])
                old = cn_acc[k]
                cn_acc[k] = max(old + lam, 0.0)
                lam = cn_acc[k] - old
                vel[b, 0] += inv_mass[b] * lam * nx
                vel[b, 1] += inv_mass[b] * lam * nz
                angvel[b] += inv_inertia[b] * lam * (crx[k] * nz - crz[k] * nx)
                # friction, capped by the current normal impulse
                tx = -nz
                tz = nx
                vpx = vel[b, 0] - angvel[b] * crz[k]
                vpz = vel[b, 1] + angvel[b] * crx[k]
                vt = vpx * tx + vpz * tz
                lam = -ct_mass[k] * vt
                cap = mu * cn_acc[k]
                old = ct_acc[k]
                ct_acc[k] = min(max(old + lam, -cap), cap)
                lam = ct_acc[k] - old
                vel[b, 0] += inv_mass[b] * lam * tx
                vel[b, 1] += inv_mass[b] * lam * tz
                angvel[b] += inv_inertia[b] * lam * (crx[k] * tz - crz[k] * tx)

        for b in range(nb):
            pos[b, 0] += vel[b, 0] * dt
            pos[b, 1] += vel[b, 1] * dt
            ang[b] += angvel[b] * dt


@njit(cache=True)
def contact_depths(pos, ang, c_body, c_local, blocks):
    out = np.zeros(c_body.shape[0])
    for k in range(c_body.shape[0]):
        b = c_body[k]
        lx, ly = _rot(ang[b], c_local[k, 0], c_local[k, 1])
        depth, _, _ = _contact_geometry(blocks, pos[b, 0] + lx, pos[b, 1] + ly)
        out[k] = max(depth, 0.0)
    return out
