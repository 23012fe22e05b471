"""Writing and running a protocol script by hand.

Run: python3 demos/oracle_script.py
"""

from cavitydistill.oracle import expand_symbolic, run_script

SCRIPT = """
# retrieve a photon: ground atom, one photon, quarter Rabi cycle
atoms 1
cavities 1 truncation 2
prepare-atoms 1 amplitudes 0 1
fock a 1
interact 1 a lt pi/2
measure-atom 1 basis z outcome e
"""

result = run_script(expand_symbolic(SCRIPT))
print(f"probability the atom absorbed the photon: {result.probability:.12f}")
for entry in result.log:
    print(f"  line {entry.line}: {entry.step} p = {entry.probability:.6f}")
print("remaining subsystems:", result.labels)
