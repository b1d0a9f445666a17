"""
Reproduce script for atomic-beamformer.

Runs every experiment with the default configuration and writes the
result tables and figures into one directory.
"""

import sys
from pathlib import Path

from atomic_beamformer.main import SUBCOMMANDS, run

RUNS = [name for name in SUBCOMMANDS if name != "dump-config"]


def run_experiment(subcommand, out_dir, extra):
    """Run one subcommand and report its exit status."""
    print(f"\n{subcommand}...")
    args = [subcommand, "--out", str(out_dir / f"{subcommand}.csv")]
    if subcommand != "oracle-check":
        args.append("--svg")
    code = run(args + extra)
    if code == 0:
        print(f"✓ {subcommand} completed successfully")
    else:
        print(f"✗ {subcommand} failed with exit status {code}")
    return code == 0


def main():
    """Main reproduce function."""
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "results")
    extra = sys.argv[2:]

    print("atomic-beamformer Reproduce Script")
    print("=" * 34)
    print(f"Output directory: {out_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    if run(["dump-config", "--out", str(out_dir / "config.yaml")]) != 0:
        return 1

    failed = [name for name in RUNS if not run_experiment(name, out_dir, extra)]
    if failed:
        print(f"\n⚠️  Failed: {', '.join(failed)}")
        return 1

    print("\n🎉 All experiments completed successfully!")
    return 0


if __name__ == "__main__":
    sys.exit(main())
