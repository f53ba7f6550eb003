"""CMake-driven build of the knocksim extension module.

scikit-build-core would do this natively; this shim keeps the wheel buildable
with plain setuptools (pip install -e . --no-build-isolation).
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        source_dir = Path(__file__).parent.resolve()

        cfg = os.environ.get("KNOCKSIM_BUILD_TYPE", "Release")
        cmake_args = [
            f"-DCMAKE_BUILD_TYPE={cfg}",
            "-DKNOCKSIM_BUILD_TESTS=OFF",
            "-DKNOCKSIM_BUILD_CLI=OFF",
            "-DKNOCKSIM_BUILD_PYTHON=ON",
        ]
        subprocess.run(
            ["cmake", "-S", str(source_dir), "-B", str(build_dir)] + cmake_args,
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "knocksim_pymod",
             "-j", str(os.cpu_count() or 2)],
            check=True,
        )

        built = list((build_dir / "python" / "knocksim").glob("_core.*"))
        if not built:
            raise RuntimeError("extension module was not produced")
        out_dir.mkdir(parents=True, exist_ok=True)
        dest = out_dir / built[0].name
        dest.write_bytes(built[0].read_bytes())
        if sys.platform != "win32":
            dest.chmod(0o755)


setup(
    ext_modules=[CMakeExtension("knocksim._core")],
    cmdclass={"build_ext": CMakeBuild},
)
