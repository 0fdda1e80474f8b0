# %% [markdown]
# # Command line
#
# The same computations from the `hawkestail` entry point.  Output is CSV
# (tail, table, simulate) or JSON (diag).

# %%
from hawkestail.cli import main

main(["tail", "--method", "order2", "--t", "25", "--x", "4"])
main(["tail", "--method", "is", "--t", "10", "--x", "4", "--n-paths", "20000", "--seed", "1"])
main(["tail", "--method", "clt", "--t", "10", "--y", "1.5"])

# %% [markdown]
# Table without the IS columns (`--n-paths 0`); warnings go to stderr.

# %%
main(["table", "--kernel", "powerlaw", "--n-paths", "0"])

# %%
main(["diag", "--x", "5"])
main(["simulate", "--t", "2", "--n-paths", "2", "--seed", "4"])
