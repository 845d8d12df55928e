"""
Version information for HydroSwitch
"""

__version__ = "1.0.0"
__version_info__ = (1, 0, 0)

# Versioning follows Semantic Versioning (SemVer):
# - Major: changes to output formats or solver defaults that alter iteration counts
# - Minor: new schemes, cases or CLI subcommands
# - Patch: fixes that keep recorded iteration counts unchanged
