"""Year-by-year steady states on the bundled synthetic series."""
from scalecon.scenario import MODES, ScenarioSpec, compare, run
from scalecon.series import synthetic_series

series = synthetic_series()
results = [run(ScenarioSpec(mode, mode), series) for mode in MODES]
table = compare(results)
print("year " + " ".join(f"{n[:14]:>14}" for n in table.names))
for year, row in zip(table.years, table.indices):
    print(f"{year} " + " ".join(f"{v:14.4f}" for v in row))
