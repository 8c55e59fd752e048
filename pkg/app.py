"""
Indoor THz Coverage API
"""
from flask import Flask
from flask_cors import CORS
from flask_restx import Api, Resource
import logging

from config.settings import Settings
from controllers.coverage_controller import CoverageController

# Initialize Flask app
app = Flask(__name__)
CORS(app, origins=Settings.CORS_ORIGINS)

# Logging configuration
Settings.configure_logging()
logger = logging.getLogger(__name__)

# Swagger API setup
api = Api(
    app,
    version='1.0',
    title='Indoor THz Coverage API',
    description='Coverage probability of an indoor THz downlink with wall and human blockage, '
                'sectored antennas and fluctuating two-ray fading',
    doc='/swagger/',
    prefix='/api'
)

# Initialize controllers
coverage_controller = CoverageController(api)


# API Routes
@api.route('/coverage')
class Coverage(Resource):
    @api.expect(coverage_controller.coverage_request_model)
    @api.doc('compute_coverage', description='Coverage probability with void, truncation and quadrature diagnostics')
    def post(self):
        """Coverage probability of the typical UE"""
        return coverage_controller.compute_coverage(api.payload)


@api.route('/distance-pdf')
class DistancePdf(Resource):
    @api.expect(coverage_controller.distance_request_model)
    @api.doc('distance_pdf', description='PDF and CDF of the horizontal distance to the nearest LoS AP')
    def post(self):
        """Nearest LoS AP distance law"""
        return coverage_controller.distance_pdf(api.payload)


@api.route('/hitting')
class Hitting(Resource):
    @api.expect(coverage_controller.distance_request_model)
    @api.doc('hitting', description='Beam hitting probabilities and in-room arc segments')
    def post(self):
        """Beam hitting probabilities"""
        return coverage_controller.hitting(api.payload)


@api.route('/defaults')
class Defaults(Resource):
    def get(self):
        """Default deployment parameters"""
        return coverage_controller.get_defaults()


@api.route('/stats')
class Stats(Resource):
    def get(self):
        """Request statistics"""
        return coverage_controller.get_stats()


@api.route('/config')
class Config(Resource):
    def get(self):
        """Current engine configuration"""
        return {'success': True, 'data': Settings.get_config()}


if __name__ == '__main__':
    print("Indoor THz Coverage API starting...")
    print(f"Swagger UI: http://localhost:{Settings.PORT}/swagger/")

    logger.info("Indoor THz Coverage API starting...")
    app.run(host=Settings.HOST, port=Settings.PORT, debug=Settings.DEBUG)
