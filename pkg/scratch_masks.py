"""Scratch: verify candidate region masks against the stabilizer oracle."""
import math
from topocorr.toric import (ToricCodeSpec, toric_ground_state, region_entropy_bits,
                            tee, RegionMask, cmi_bits, mutual_information_bits)

LN2 = math.log(2)
spec = ToricCodeSpec(4, 4)
tab = toric_ground_state(spec)
h, v = spec.h, spec.v

# --- candidate LW-annulus, 8 edges, hole = plaquettes (1,1),(2,1) ---
# Z-winding: hole boundary {h11,h21,h12,h22,v11,v31}
# X-winding: star(2,1)*star(2,2) = {h11,h21,v20,h12,h22,v22}
A = [h(1, 2), h(2, 2)]            # top inner-ring edges
C = [h(1, 1), h(2, 1)]            # bottom inner-ring edges
B1 = [v(1, 1), v(2, 2)]           # left side + top pendant
B2 = [v(3, 1), v(2, 0)]           # right side + bottom pendant
B = B1 + B2
R = A + B + C
print("LW candidate, |R| =", len(R))
s = lambda q: region_entropy_bits(tab, q)
print("S(R)/ln2 =", s(R))
print("gamma/ln2 =", (s(A+B) + s(B+C) + s(C+A) - s(A) - s(B) - s(C) - s(A+B+C)))
print("I(A:C) bits =", mutual_information_bits(tab, A, C))
print("I(A:B2C) bits =", mutual_information_bits(tab, A, B2 + C))
print("I(A:B2|B1) bits =", cmi_bits(tab, A, B1, B2))
print("I(B1:C|B2) bits =", cmi_bits(tab, B1, B2, C))
print("I(A:C|B) bits =", cmi_bits(tab, A, B, C))
print("singles:", s(A), s(B), s(C), " sizes:", len(A), len(B), len(C))

# swap role check (B1 adjacent to A?)
print("\n--- region connectivity ---")
from topocorr.toric import _n_components
print("A comps:", _n_components(spec, A), "B comps:", _n_components(spec, B),
      "C comps:", _n_components(spec, C))

# --- KP-disk candidate: 12-edge wheel around P(1,1), 3 sectors ---
print("\nKP-disk candidates")
wheel = [h(1,1), h(1,2), v(1,1), v(2,1),
         h(0,1), v(1,0), h(2,1), v(2,0), h(0,2), v(1,2), h(2,2), v(2,2)]
# sectors around the center plaquette
Ad = [h(1,2), v(1,2), v(2,2), h(2,2)]      # top + NE spoke
Bd = [v(2,1), h(2,1), v(2,0), h(1,1)]      # right + bottom inner
Cd = [v(1,1), h(0,1), v(1,0), h(0,2)]      # left + SW spokes
assert sorted(Ad+Bd+Cd) == sorted(wheel)
gam = (s(Ad+Bd) + s(Bd+Cd) + s(Cd+Ad) - s(Ad) - s(Bd) - s(Cd) - s(Ad+Bd+Cd))
print("wheel disk gamma/ln2 =", gam, " comps:", _n_components(spec, Ad),
      _n_components(spec, Bd), _n_components(spec, Cd))

# simple pinwheel: star(1,1) edges in 3 sectors
Ap = [h(1,1)]; Bp = [h(0,1)]; Cp = [v(1,1), v(1,0)]
gp = (s(Ap+Bp) + s(Bp+Cp) + s(Cp+Ap) - s(Ap) - s(Bp) - s(Cp) - s(Ap+Bp+Cp))
print("pinwheel gamma/ln2 =", gp)

# --- KP-annulus: 16-edge wheel around 2-plaquette hole (1,1),(1,2) vertical ---
print("\nKP-annulus candidate (16 edges)")
ring = [h(1,1), h(1,3), v(1,1), v(1,2), v(2,1), v(2,2)]
spokes = [h(0,1), v(1,0), h(2,1), v(2,0), h(0,3), v(1,3), h(2,3), v(2,3),
          h(0,2), h(2,2)]
R2 = ring + spokes
print("|R2| =", len(R2), "S(R2)/ln2 =", s(R2))
# three arcs: A = lower-left..., go around: will try a natural 3-arc split
Aa = [h(1,1), v(1,0), h(0,1), v(2,0), h(2,1)]          # bottom paddle
Ba = [v(1,1), v(1,2), h(0,2)]                           # left strut
Ca = [h(1,3), v(1,3), h(0,3), v(2,3), h(2,3), v(2,1), v(2,2), h(2,2)]  # top + right
assert sorted(Aa+Ba+Ca) == sorted(R2), "split mismatch"
ga = (s(Aa+Ba) + s(Ba+Ca) + s(Ca+Aa) - s(Aa) - s(Ba) - s(Ca) - s(Aa+Ba+Ca))
print("KP-annulus gamma/ln2 =", ga, " I(A:C) =", mutual_information_bits(tab, Aa, Ca))

# --- far-separated three disks -> 0 ---
print("\nthree separated single edges")
Af = [h(0,0)]; Bf = [h(2,0)]; Cf = [v(1,2)]
gf = (s(Af+Bf) + s(Bf+Cf) + s(Cf+Af) - s(Af) - s(Bf) - s(Cf) - s(Af+Bf+Cf))
print("gamma/ln2 =", gf)
