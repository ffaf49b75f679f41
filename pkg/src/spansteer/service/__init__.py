from .app import ServiceComponents, components_from_config, create_app

__all__ = ["ServiceComponents", "components_from_config", "create_app"]
