"""Total variation discretisations."""

from enum import IntEnum, auto


class TvVariant(IntEnum):
    ISOTROPIC = auto()
    ANISOTROPIC = auto()

    @classmethod
    def parse(cls, name):
        """Return the variant for a command line flag value."""
        if isinstance(name, cls):
            return name
        flags = {'iso': cls.ISOTROPIC, 'isotropic': cls.ISOTROPIC,
                 'aniso': cls.ANISOTROPIC, 'anisotropic': cls.ANISOTROPIC}
        try:
            return flags[name.lower()]
        except KeyError:
            raise ValueError(f'Unknown TV variant: {name}.') from None

    @property
    def flag(self):
        return 'iso' if self is TvVariant.ISOTROPIC else 'aniso'
