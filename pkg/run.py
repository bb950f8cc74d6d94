import uvicorn
from marginalflow.config import settings

if __name__ == "__main__":
    # serves the job API; batch runs go through `python -m marginalflow`
    uvicorn.run(
        "marginalflow.main:app",
        host=settings.host,
        port=settings.port,
        log_level=settings.log_level.lower(),
        reload=True
    )
