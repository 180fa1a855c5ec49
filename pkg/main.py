import logging
from contextlib import asynccontextmanager

import uvicorn
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from config.config import Config, setup_logging
from services.simulation.simulation_router import router as simulation_router

# Initialize configuration
config = Config.get_instance()
logger = logging.getLogger("robopainter.api")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan events"""
    # Startup
    setup_logging()
    logger.info("Starting RoboPainter Simulator API...")

    current = Config.get_instance()
    problems = current.validate()
    if problems:
        for problem in problems:
            logger.warning("Configuration problem: %s", problem)
        logger.warning("Some endpoints may not work until the configuration is fixed")
    else:
        logger.info("Configuration validation passed")

    logger.info("Parameter file: %s", current.PARAMS_PATH)
    logger.info("Rooms directory: %s", current.ROOMS_DIR)
    logger.info("Output directory: %s", current.ensure_output_dir())
    logger.info("RoboPainter Simulator API is ready")

    yield

    # Shutdown
    logger.info("RoboPainter Simulator API shutdown complete")


# Create FastAPI application
app = FastAPI(
    title=config.APP_NAME,
    version=config.APP_VERSION,
    description="""
    ## RoboPainter Simulator API

    Plans and simulates an 8-DOF mobile robot (differential-drive base plus a
    6-DOF arm) spray-painting the walls of a rectangular room.

    ### Main Endpoint:
    **POST /api/robopainter/simulate** - Run a painting mission in a room

    ### Features:
    - **Planning**: vertical paint strips, base posts and outline passes per wall
    - **Simulation**: mission state machine with sonar localization, paint cup
      and obstacle monitoring, arm dynamics in the loop
    - **Reports**: coverage, painting rates, localization error, pause events
    - **Outputs**: report JSON, trace JSON-lines, joint log CSV, plan and coverage SVGs

    ### Simple Workflow:
    1. **Plan** → POST a room description to `/api/robopainter/plan`
    2. **Simulate** → POST the room and a SimConfig to `/api/robopainter/simulate`
    3. **Download** → Fetch the run files from `/api/robopainter/download/{name}`
    """,
    debug=config.DEBUG,
    lifespan=lifespan
)

# Configure CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(simulation_router)


# Root endpoint
@app.get("/", tags=["Root"])
async def root():
    """Root endpoint with API information"""
    return {
        "message": "Welcome to the RoboPainter Simulator API",
        "version": config.APP_VERSION,
        "status": "running",
        "main_endpoint": "POST /api/robopainter/simulate",
        "endpoints": {
            "docs": "/docs",
            "health": "/health",
            "status": "/api/robopainter/status",
            "params": "/api/robopainter/params",
            "plan": "/api/robopainter/plan",
            "plan_upload": "/api/robopainter/plan/upload",
            "plan_bundled_room": "/api/robopainter/rooms/{name}/plan",
            "simulate": "/api/robopainter/simulate",
            "outputs": "/api/robopainter/outputs",
            "download": "/api/robopainter/download/{name}",
            "cleanup": "/api/robopainter/cleanup"
        }
    }


# Health check endpoint
@app.get("/health", tags=["Health"])
async def health_check():
    """Simple health check endpoint"""
    return {
        "status": "healthy",
        "service": config.APP_NAME,
        "version": config.APP_VERSION
    }


# Global exception handler
@app.exception_handler(Exception)
async def global_exception_handler(request, exc):
    """Global exception handler for unhandled errors"""
    logger.exception("Unhandled error on %s", request.url.path)
    return JSONResponse(
        status_code=500,
        content={
            "success": False,
            "error": "Internal server error",
            "details": str(exc) if config.DEBUG else "An unexpected error occurred"
        }
    )


if __name__ == "__main__":
    setup_logging()
    logger.info("Starting %s v%s on %s:%d (debug %s)", config.APP_NAME, config.APP_VERSION,
                config.HOST, config.PORT, config.DEBUG)

    uvicorn.run(
        "main:app",
        host=config.HOST,
        port=config.PORT,
        reload=config.DEBUG,
        log_level="info" if not config.DEBUG else "debug"
    )
