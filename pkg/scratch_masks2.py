"""Scratch 2: KP-annulus split search + ring subdivision checks."""
import itertools, math
from topocorr.toric import (ToricCodeSpec, toric_ground_state, region_entropy_bits,
                            cmi_bits, mutual_information_bits, _n_components)

spec = ToricCodeSpec(4, 4)
tab = toric_ground_state(spec)
h, v = spec.h, spec.v
s = lambda q: region_entropy_bits(tab, q)

def gamma_bits(A, B, C):
    return (s(A+B) + s(B+C) + s(C+A) - s(A) - s(B) - s(C) - s(A+B+C))

# --- 8-edge mask, regrouped as six ring parts ---
X = [
    [v(1,1)],            # X1 left
    [h(1,1), v(2,0)],    # X2 bottom-left + pendant
    [h(2,1)],            # X3 bottom-right
    [v(3,1)],            # X4 right
    [h(2,2), v(2,2)],    # X5 top-right + pendant
    [h(1,2)],            # X6 top-left
]
A = X[0] + X[1]; B = X[2] + X[3]; C = X[4] + X[5]
print("ring grouping gamma/ln2 =", gamma_bits(A, B, C))
print("I(A:C) =", mutual_information_bits(tab, A, C),
      "I(A:B) =", mutual_information_bits(tab, A, B),
      "I(B:C) =", mutual_information_bits(tab, B, C))
print("comps:", _n_components(spec, A), _n_components(spec, B), _n_components(spec, C))
ok = True
for i in range(6):
    t = cmi_bits(tab, X[(i-1) % 6], X[i], X[(i+1) % 6])
    print(f"  I(X{(i-1)%6+1}:X{(i+1)%6+1}|X{i+1}) =", t)
    ok &= (t == 0)
for i in range(6):
    for d in (2, 3, 4):
        j = (i + d) % 6
        m = mutual_information_bits(tab, X[i], X[j])
        if m:
            print(f"  I(X{i+1}:X{j+1}) = {m}  VIOLATION")
            ok = False
print("ring preconditions all zero:", ok)

# also check pairwise unions of opposite parts (assumption I on unions)
for i in range(6):
    m = mutual_information_bits(tab, X[i], X[(i+2)%6] + X[(i+3)%6] + X[(i+4)%6])
    if m:
        print(f"  I(X{i+1}: far-union) = {m} VIOLATION")

# --- 16-edge wheel around vertical 2-plaquette hole, KP split search ---
ring = [h(1,1), h(1,3), v(1,1), v(1,2), v(2,1), v(2,2)]
spokes = [h(0,1), v(1,0), h(2,1), v(2,0), h(0,3), v(1,3), h(2,3), v(2,3),
          h(0,2), h(2,2)]
R2 = ring + spokes
# hand-derived assignment from design notes
A2 = [v(1,1), h(1,1), h(0,1), v(1,0), h(0,2)]
B2 = [v(1,2), h(1,3), h(0,3), v(1,3), v(2,2), h(2,3), v(2,3)]
C2 = [v(2,1), h(2,1), v(2,0), h(2,2)]
assert sorted(A2+B2+C2) == sorted(R2)
print("\n16-wheel hand split gamma/ln2 =", gamma_bits(A2, B2, C2),
      " comps:", _n_components(spec, A2), _n_components(spec, B2), _n_components(spec, C2))
print("I(A:C) =", mutual_information_bits(tab, A2, C2))
