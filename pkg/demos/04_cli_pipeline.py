"""Running the whole chain through the command line entry point."""
import tempfile
from pathlib import Path

from sarfuse.cli import main
from sarfuse.raster import save_labels, save_raster
from sarfuse.synthetic import two_texture_scene

work = Path(tempfile.mkdtemp(prefix="sarfuse_demo_"))
sar, opt, gt = two_texture_scene(size=48, seed=7)
save_raster(sar, work / "s1_vv")
save_raster(opt, work / "s2")
save_labels(gt, work / "gt")

# Equivalent shell: sarfuse pipeline s1_vv.hdr s2.hdr gt.hdr --out run --seed 7
main(["pipeline", str(work / "s1_vv.hdr"), str(work / "s2.hdr"), str(work / "gt.hdr"),
      "--out", str(work / "run"), "--seed", "7"])
print(sorted(p.name for p in (work / "run").iterdir()))

# The manifest is a config file; feeding it back reproduces every byte.
main(["pipeline", str(work / "s1_vv.hdr"), str(work / "s2.hdr"), str(work / "gt.hdr"),
      "--out", str(work / "rerun"), "--config", str(work / "run" / "manifest.txt")])
same = all((work / "run" / p.name).read_bytes() == (work / "rerun" / p.name).read_bytes()
           for p in (work / "run").iterdir())
print("byte-identical rerun:", same)

main(["quicklook", str(work / "run" / "fused.hdr"), "--bands", "3,0,1", "--out", str(work / "fused.ppm")])
print("quicklook written to", work / "fused.ppm")
