from cody.envs.base import EnvSpec, PixelEnv
from cody.envs.pendulum import PendulumEnv
from cody.envs.point_mass import PointMassEnv, PointMassGoalA, PointMassGoalB

REGISTRY: dict[str, type[PixelEnv]] = {
    cls.name: cls for cls in (PointMassEnv, PointMassGoalA, PointMassGoalB, PendulumEnv)
}


def make_env(name: str, **kwargs) -> PixelEnv:
    try:
        cls = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(REGISTRY)}") from None
    return cls(**kwargs)


__all__ = ["EnvSpec", "PixelEnv", "PendulumEnv", "PointMassEnv", "REGISTRY", "make_env"]
