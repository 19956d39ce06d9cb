import os
from typing import Iterable, Sequence, Tuple

from binfecund.build.driver import CompilerProfile
from binfecund.build.toy import ToyProgram, save_toy_program, write_elf
from binfecund.campaign.config import CampaignConfig

Pair = Tuple[int, int]


def switch_catalog(num_flags: int) -> str:
    return "".join(f"-ftoy-{i:02d}\tswitch\n" for i in range(num_flags))


def make_toy(
    directory,
    num_flags: int,
    effective: Iterable[int],
    dependency_pairs: Sequence[Pair] = (),
    conflict_pairs: Sequence[Pair] = (),
    crash_pairs: Sequence[Pair] = (),
    function_count: int = 8,
    stripped: bool = False,
    name: str = "toy",
) -> Tuple[str, str]:
    """Write a switch-only catalog and a toy program definition, return their paths."""
    directory = str(directory)
    os.makedirs(directory, exist_ok=True)
    catalog_path = os.path.join(directory, f"{name}.catalog")
    with open(catalog_path, "w") as f:
        f.write(switch_catalog(num_flags))

    program = ToyProgram(
        program_id=name,
        base_output=name.encode() + b"-base-output",
        effective_flags=frozenset(effective),
        dependency_pairs=frozenset(dependency_pairs),
        conflict_pairs=frozenset(conflict_pairs),
        crash_pairs=frozenset(crash_pairs),
        function_count=function_count,
        stripped=stripped,
    )
    program_path = os.path.join(directory, f"{name}.json")
    save_toy_program(program, program_path)
    return catalog_path, program_path


def toy_config(directory, catalog: str, program: str, **kwargs) -> CampaignConfig:
    directory = str(directory)
    kwargs.setdefault("max_iterations", 100)
    kwargs.setdefault("archive_root", os.path.join(directory, "archive"))
    work_dir = kwargs.pop("work_dir", os.path.join(kwargs["archive_root"], ".work"))
    return CampaignConfig(
        program_id=kwargs.pop("program_id", "toy"),
        catalog=catalog,
        source=program,
        profile=CompilerProfile(backend="toy", work_dir=work_dir),
        **kwargs,
    )


def elf_with_functions(*bodies: bytes, with_symbols: bool = True) -> bytes:
    return write_elf([(f"fn_{i}", body) for i, body in enumerate(bodies)], with_symbols=with_symbols)


# 6 independent effective flags: 64 reachable outputs
SIX_FLAGS = dict(num_flags=6, effective=range(6))

# 12 flags, 6 effective, 3 dependency pairs
DEPENDENT = dict(num_flags=12, effective=range(6), dependency_pairs=[(0, 6), (1, 7), (2, 8)])

# 24 flags, 16 effective, 8 disjoint conflict pairs: about 1 uniform seed in 10 compiles
CONFLICT_HEAVY = dict(num_flags=24, effective=range(16), conflict_pairs=[(i, i + 16) for i in range(8)])
