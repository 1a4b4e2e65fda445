from conewave.core.config import settings
